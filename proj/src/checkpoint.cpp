#include "r2ps/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "r2ps/rng.hpp"

namespace r2ps {

namespace {

using json = nlohmann::json;

void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t read_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_f32_le(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    append_u32_le(out, bits);
}

float read_f32_le(const std::uint8_t* p) {
    const std::uint32_t bits = read_u32_le(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

} // namespace

std::vector<std::uint8_t> checkpoint_bytes(const EncoderParams& p, const std::string& component, bool normalize) {
    auto refs = tensor_refs(const_cast<EncoderParams&>(p));

    json header;
    header["component"] = component;
    header["normalize"] = normalize;
    header["config"] = {{"dim", p.cfg.dim}, {"vocab", p.cfg.vocab}, {"max_pos", p.cfg.max_pos}, {"seed", p.cfg.seed}};
    json manifest = json::array();
    std::size_t offset = 0;
    for (const auto& r : refs) {
        json t;
        t["name"] = r.name;
        if (std::strcmp(r.name, "tok") == 0)
            t["shape"] = {p.cfg.vocab, p.cfg.dim};
        else if (std::strcmp(r.name, "pos") == 0)
            t["shape"] = {p.cfg.max_pos, p.cfg.dim};
        else if (std::strcmp(r.name, "head_w") == 0)
            t["shape"] = {p.cfg.dim};
        else if (std::strcmp(r.name, "head_b") == 0)
            t["shape"] = json::array();
        else
            t["shape"] = {p.cfg.dim, p.cfg.dim};
        t["offset"] = offset;
        offset += r.size * 4;
        manifest.push_back(std::move(t));
    }
    header["tensors"] = std::move(manifest);
    const std::string hdr = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 + hdr.size() + offset);
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 8);
    append_u32_le(out, static_cast<std::uint32_t>(hdr.size()));
    out.insert(out.end(), hdr.begin(), hdr.end());
    for (const auto& r : refs)
        for (std::size_t i = 0; i < r.size; ++i) append_f32_le(out, static_cast<float>(r.data[i]));
    return out;
}

void save_checkpoint(const EncoderParams& p, const std::string& component, bool normalize, const std::string& path) {
    write_file_bytes(path, checkpoint_bytes(p, component, normalize));
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
        throw FormatError("not a model checkpoint: " + path);
    const std::uint32_t hdr_len = read_u32_le(bytes.data() + 8);
    if (12 + static_cast<std::size_t>(hdr_len) > bytes.size())
        throw FormatError("checkpoint header truncated: " + path);
    json header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + hdr_len, nullptr, false);
    if (header.is_discarded() || !header.is_object() || !header.contains("tensors") || !header.contains("config"))
        throw FormatError("checkpoint header is not valid JSON: " + path);

    LoadedCheckpoint out;
    out.component = header.value("component", std::string("dual"));
    out.normalize = header.value("normalize", true);
    const auto& cfg = header["config"];
    out.params.cfg.dim = cfg.at("dim").get<std::size_t>();
    out.params.cfg.vocab = cfg.at("vocab").get<std::size_t>();
    out.params.cfg.max_pos = cfg.at("max_pos").get<std::size_t>();
    out.params.cfg.seed = cfg.at("seed").get<std::uint64_t>();
    out.params.has_head = out.component == "cross";

    EncoderParams& p = out.params;
    p.tok.assign(p.cfg.vocab, p.cfg.dim);
    p.pos.assign(p.cfg.max_pos, p.cfg.dim);
    p.wq.assign(p.cfg.dim, p.cfg.dim);
    p.wk.assign(p.cfg.dim, p.cfg.dim);
    p.wv.assign(p.cfg.dim, p.cfg.dim);
    if (p.has_head) p.head_w.assign(p.cfg.dim, 0.0);

    auto refs = tensor_refs(p);
    const auto& manifest = header["tensors"];
    if (!manifest.is_array() || manifest.size() != refs.size())
        throw FormatError("checkpoint tensor manifest does not match component: " + path);
    const std::size_t data_start = 12 + hdr_len;
    for (std::size_t t = 0; t < refs.size(); ++t) {
        const auto& entry = manifest[t];
        if (entry.at("name").get<std::string>() != refs[t].name)
            throw FormatError("unexpected tensor \"" + entry.at("name").get<std::string>() + "\" in " + path);
        const std::size_t offset = data_start + entry.at("offset").get<std::size_t>();
        if (offset + refs[t].size * 4 > bytes.size())
            throw FormatError("checkpoint data truncated at tensor \"" + std::string(refs[t].name) + "\": " + path);
        for (std::size_t i = 0; i < refs[t].size; ++i)
            refs[t].data[i] = static_cast<double>(read_f32_le(bytes.data() + offset + i * 4));
    }
    return out;
}

std::string fingerprint_hex(const std::vector<std::uint8_t>& bytes) {
    const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff n = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(n > 0 ? static_cast<std::size_t>(n) : 0);
    if (!bytes.empty()) in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw Error("failed reading file: " + path);
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing file: " + path);
}

} // namespace r2ps
