#include "r2ps/index.hpp"

#include <algorithm>
#include <cstring>

#include <nlohmann/json.hpp>

#include "r2ps/checkpoint.hpp"
#include "r2ps/parallel.hpp"

namespace r2ps {

namespace {

using json = nlohmann::json;

constexpr char kIndexMagic[8] = {'R', '2', 'P', 'S', 'I', 'D', 'X', '1'};

// Total order on hits: score descending, id ascending. Every selection path
// must agree with it so results do not depend on partitioning.
inline bool hit_before(double score_a, std::int64_t id_a, double score_b, std::int64_t id_b) {
    if (score_a != score_b) return score_a > score_b;
    return id_a < id_b;
}

std::vector<double> score_all(const EmbeddingIndex& index, const Embedding& q) {
    if (q.size() != index.dim) throw DimensionMismatch("query embedding width does not match index");
    const std::size_t n = index.count();
    std::vector<double> scores(n);
    parallel_for(n, [&](std::size_t i) {
        const double* row = index.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < index.dim; ++j) s += q[j] * row[j];
        scores[i] = s;
    });
    return scores;
}

std::vector<RankedHit> hits_from_sorted(const EmbeddingIndex& index, const std::vector<double>& scores,
                                        std::vector<std::size_t>&& order, std::size_t k) {
    const std::size_t n = std::min(k, order.size());
    std::vector<RankedHit> hits(n);
    for (std::size_t r = 0; r < n; ++r)
        hits[r] = RankedHit{index.ids[order[r]], scores[order[r]], r + 1};
    return hits;
}

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

} // namespace

EmbeddingIndex build_index(const std::vector<CodeEntry>& codebase, const Vocabulary& vocab,
                           const SeqLimits& limits, const DualEncoder& dual, ForwardCounters* fc) {
    if (codebase.empty()) throw EmptyCodebase("cannot build an index over an empty codebase");

    // Tokenize serially first so malformed entries fail with their id.
    std::vector<IdSequence> seqs(codebase.size());
    for (std::size_t i = 0; i < codebase.size(); ++i) {
        try {
            seqs[i] = encode_ids(tokenize(codebase[i].code, SeqKind::Code), vocab, limits);
        } catch (const Error& e) {
            throw Error("code id " + std::to_string(codebase[i].id) + ": " + e.what());
        }
    }

    EmbeddingIndex index;
    index.dim = dual.params.cfg.dim;
    index.normalized = dual.normalize;
    index.ids.resize(codebase.size());
    index.rows.assign(codebase.size() * index.dim, 0.0);
    parallel_for(codebase.size(), [&](std::size_t i) {
        index.ids[i] = codebase[i].id;
        const Embedding e = encode(dual, seqs[i], fc);
        std::copy(e.begin(), e.end(), index.rows.begin() + i * index.dim);
    });
    index.fingerprint = fingerprint_hex(checkpoint_bytes(dual.params, "dual", dual.normalize));
    return index;
}

std::vector<RankedHit> top_k_serial(const EmbeddingIndex& index, const Embedding& q, std::size_t k) {
    if (q.size() != index.dim) throw DimensionMismatch("query embedding width does not match index");
    const std::size_t n = index.count();
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = index.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < index.dim; ++j) s += q[j] * row[j];
        scores[i] = s;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return hit_before(scores[a], index.ids[a], scores[b], index.ids[b]);
    });
    return hits_from_sorted(index, scores, std::move(order), k);
}

std::vector<RankedHit> top_k(const EmbeddingIndex& index, const Embedding& q, std::size_t k) {
    if (q.size() != index.dim) throw DimensionMismatch("query embedding width does not match index");
    const std::size_t n = index.count();
    if (k == 0 || n == 0) return {};
    if (k >= n) return top_k_serial(index, q, n);

    struct Cand {
        double score;
        std::int64_t id;
    };
    auto worse = [](const Cand& a, const Cand& b) { return hit_before(a.score, a.id, b.score, b.id); };

    const int chunks = effective_threads(n);
    const std::size_t per = (n + chunks - 1) / chunks;
    std::vector<std::vector<Cand>> winners(static_cast<std::size_t>(chunks));
    parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
        const std::size_t begin = c * per;
        const std::size_t end = std::min(n, begin + per);
        // Min-heap on the total order: heap top is the weakest kept candidate.
        std::vector<Cand> heap;
        heap.reserve(k + 1);
        for (std::size_t i = begin; i < end; ++i) {
            const double* row = index.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < index.dim; ++j) s += q[j] * row[j];
            const Cand cand{s, index.ids[i]};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), worse);
            } else if (hit_before(cand.score, cand.id, heap.front().score, heap.front().id)) {
                std::pop_heap(heap.begin(), heap.end(), worse);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), worse);
            }
        }
        winners[c] = std::move(heap);
    });

    std::vector<Cand> merged;
    for (auto& w : winners) merged.insert(merged.end(), w.begin(), w.end());
    std::sort(merged.begin(), merged.end(), worse);
    if (merged.size() > k) merged.resize(k);
    std::vector<RankedHit> hits(merged.size());
    for (std::size_t r = 0; r < merged.size(); ++r) hits[r] = RankedHit{merged[r].id, merged[r].score, r + 1};
    return hits;
}

std::vector<RankedHit> full_ranking(const EmbeddingIndex& index, const Embedding& q) {
    const std::vector<double> scores = score_all(index, q);
    std::vector<std::size_t> order(index.count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return hit_before(scores[a], index.ids[a], scores[b], index.ids[b]);
    });
    return hits_from_sorted(index, scores, std::move(order), order.size());
}

void save_index(const EmbeddingIndex& index, const std::string& path) {
    json header;
    header["dim"] = index.dim;
    header["count"] = index.count();
    header["normalized"] = index.normalized;
    header["fingerprint"] = index.fingerprint;
    header["ids"] = index.ids;
    const std::string hdr = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 + hdr.size() + index.rows.size() * 4);
    out.insert(out.end(), kIndexMagic, kIndexMagic + 8);
    append_u32_le(out, static_cast<std::uint32_t>(hdr.size()));
    out.insert(out.end(), hdr.begin(), hdr.end());
    for (const double x : index.rows) {
        const float f = static_cast<float>(x);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        append_u32_le(out, bits);
    }
    write_file_bytes(path, out);
}

EmbeddingIndex load_index(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kIndexMagic, 8) != 0)
        throw FormatError("not an embedding index: " + path);
    const std::uint32_t hdr_len = read_u32_le(bytes.data() + 8);
    if (12 + static_cast<std::size_t>(hdr_len) > bytes.size()) throw FormatError("index header truncated: " + path);
    json header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + hdr_len, nullptr, false);
    if (header.is_discarded() || !header.is_object()) throw FormatError("index header is not valid JSON: " + path);

    EmbeddingIndex index;
    try {
        index.dim = header.at("dim").get<std::size_t>();
        index.normalized = header.at("normalized").get<bool>();
        index.fingerprint = header.at("fingerprint").get<std::string>();
        index.ids = header.at("ids").get<std::vector<std::int64_t>>();
        if (header.at("count").get<std::size_t>() != index.ids.size())
            throw FormatError("index header count does not match id list: " + path);
    } catch (const json::exception&) {
        throw FormatError("index header is missing required fields: " + path);
    }

    const std::size_t data_start = 12 + hdr_len;
    const std::size_t expected = index.ids.size() * index.dim * 4;
    if (bytes.size() - data_start != expected)
        throw FormatError("index data size does not match header (expected " + std::to_string(expected) +
                          " bytes): " + path);
    index.rows.resize(index.ids.size() * index.dim);
    for (std::size_t i = 0; i < index.rows.size(); ++i) {
        const std::uint32_t bits = read_u32_le(bytes.data() + data_start + i * 4);
        float f;
        std::memcpy(&f, &bits, 4);
        index.rows[i] = static_cast<double>(f);
    }
    return index;
}

bool fingerprint_matches(const EmbeddingIndex& index, const DualEncoder& dual) {
    return index.fingerprint == fingerprint_hex(checkpoint_bytes(dual.params, "dual", dual.normalize));
}

} // namespace r2ps
