#include "r2ps/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace r2ps {

namespace {

using json = nlohmann::json;

bool is_token_char(unsigned char c) {
    // Bytes >= 0x80 (UTF-8 continuation/lead) are kept inside tokens.
    return std::isalnum(c) != 0 || c >= 0x80;
}

void flush_camel_fragments(const std::string& frag, std::vector<std::string>& out) {
    if (frag.empty()) return;
    std::string cur;
    for (std::size_t i = 0; i < frag.size(); ++i) {
        const unsigned char c = frag[i];
        if (i > 0 && std::isupper(c) && std::islower(static_cast<unsigned char>(frag[i - 1]))) {
            out.push_back(cur);
            cur.clear();
        }
        cur.push_back(static_cast<char>(std::tolower(c)));
    }
    if (!cur.empty()) out.push_back(cur);
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

json parse_line(const std::string& line, std::size_t lineno) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(lineno, "malformed JSON object");
    return j;
}

std::int64_t require_id(const json& j, std::size_t lineno, bool csn_fields, std::size_t fallback) {
    if (csn_fields && !j.contains("id")) return static_cast<std::int64_t>(fallback);
    if (!j.contains("id") || !j["id"].is_number_integer()) throw ParseError(lineno, "missing integer field \"id\"");
    return j["id"].get<std::int64_t>();
}

std::string require_string(const json& j, const char* field, std::size_t lineno) {
    if (!j.contains(field) || !j[field].is_string())
        throw ParseError(lineno, std::string("missing string field \"") + field + "\"");
    return j[field].get<std::string>();
}

} // namespace

TokenSequence tokenize(const std::string& text, SeqKind kind) {
    TokenSequence seq;
    seq.kind = kind;
    std::string frag;
    for (const char ch : text) {
        if (is_token_char(static_cast<unsigned char>(ch))) {
            frag.push_back(ch);
        } else {
            flush_camel_fragments(frag, seq.tokens);
            frag.clear();
        }
    }
    flush_camel_fragments(frag, seq.tokens);
    if (seq.tokens.empty()) throw EmptyAfterTokenize("no tokens survive tokenization");
    return seq;
}

Vocabulary build_vocab(const std::vector<TokenSequence>& corpus, int min_freq) {
    if (min_freq < 1) throw PreconditionViolation("min_freq must be >= 1");
    // std::map keeps tokens sorted, which settles frequency ties lexicographically.
    std::map<std::string, std::int64_t> freq;
    for (const auto& seq : corpus)
        for (const auto& tok : seq.tokens) ++freq[tok];

    std::vector<std::pair<std::string, std::int64_t>> kept;
    kept.reserve(freq.size());
    for (auto& [tok, n] : freq)
        if (n >= min_freq) kept.emplace_back(tok, n);
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary v;
    v.min_freq = min_freq;
    v.tokens = {"<pad>", "<unk>", "<cls>", "<sep>"};
    v.tokens.reserve(4 + kept.size());
    for (auto& [tok, n] : kept) {
        (void)n;
        v.ids.emplace(tok, static_cast<std::int32_t>(v.tokens.size()));
        v.tokens.push_back(tok);
    }
    return v;
}

IdSequence encode_ids(const TokenSequence& seq, const Vocabulary& vocab, const SeqLimits& limits) {
    if (seq.tokens.empty()) throw EmptySequence("cannot encode an empty token sequence");
    IdSequence out;
    out.kind = seq.kind;
    const std::size_t n = std::min(seq.tokens.size(), limits.max_for(seq.kind));
    out.ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.ids.push_back(vocab.lookup(seq.tokens[i]));
    return out;
}

std::vector<RawPair> load_dataset(const std::string& path, bool csn_fields) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset file: " + path);
    std::vector<RawPair> pairs;
    std::unordered_map<std::int64_t, std::size_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trimmed(line).empty()) continue;
        const json j = parse_line(line, lineno);
        RawPair p;
        p.id = require_id(j, lineno, csn_fields, pairs.size());
        p.query = csn_fields && j.contains("docstring") ? require_string(j, "docstring", lineno)
                                                        : require_string(j, "query", lineno);
        p.code = require_string(j, "code", lineno);
        if (trimmed(p.query).empty()) throw ParseError(lineno, "empty \"query\"");
        if (trimmed(p.code).empty()) throw ParseError(lineno, "empty \"code\"");
        auto [it, inserted] = seen.emplace(p.id, lineno);
        if (!inserted) throw ParseError(lineno, "duplicate id " + std::to_string(p.id));
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<CodeEntry> load_codebase(const std::string& path, bool csn_fields) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open codebase file: " + path);
    std::vector<CodeEntry> entries;
    std::unordered_map<std::int64_t, std::size_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trimmed(line).empty()) continue;
        const json j = parse_line(line, lineno);
        CodeEntry e;
        e.id = require_id(j, lineno, csn_fields, entries.size());
        e.code = require_string(j, "code", lineno);
        if (trimmed(e.code).empty()) throw ParseError(lineno, "empty \"code\"");
        auto [it, inserted] = seen.emplace(e.id, lineno);
        if (!inserted) throw ParseError(lineno, "duplicate id " + std::to_string(e.id));
        entries.push_back(std::move(e));
    }
    return entries;
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
    json j;
    j["min_freq"] = vocab.min_freq;
    j["tokens"] = std::vector<std::string>(vocab.tokens.begin() + 4, vocab.tokens.end());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write vocabulary file: " + path);
    out << j.dump() << '\n';
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open vocabulary file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("min_freq") || !j.contains("tokens"))
        throw FormatError("vocabulary file is not a {min_freq, tokens} object: " + path);
    Vocabulary v;
    v.min_freq = j["min_freq"].get<int>();
    v.tokens = {"<pad>", "<unk>", "<cls>", "<sep>"};
    for (const auto& t : j["tokens"]) {
        const std::string tok = t.get<std::string>();
        v.ids.emplace(tok, static_cast<std::int32_t>(v.tokens.size()));
        v.tokens.push_back(tok);
    }
    return v;
}

} // namespace r2ps
