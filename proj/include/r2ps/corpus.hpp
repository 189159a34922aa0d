#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "r2ps/errors.hpp"

namespace r2ps {

enum class SeqKind { Query, Code };

struct RawPair {
    std::int64_t id = 0;
    std::string query;
    std::string code;
};

struct CodeEntry {
    std::int64_t id = 0;
    std::string code;
};

struct TokenSequence {
    std::vector<std::string> tokens;
    SeqKind kind = SeqKind::Query;
};

/// Token-id mapping with four fixed reserved ids. Non-reserved ids are dense
/// and assigned by descending corpus frequency, ties broken lexicographically,
/// so the same corpus always yields the same vocabulary.
struct Vocabulary {
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;
    static constexpr std::int32_t kCls = 2;
    static constexpr std::int32_t kSep = 3;

    std::unordered_map<std::string, std::int32_t> ids;
    std::vector<std::string> tokens; // size V; slots 0..3 hold reserved markers
    int min_freq = 1;

    std::size_t size() const { return tokens.size(); }

    std::int32_t lookup(const std::string& tok) const {
        auto it = ids.find(tok);
        return it == ids.end() ? kUnk : it->second;
    }
};

struct IdSequence {
    std::vector<std::int32_t> ids;
    SeqKind kind = SeqKind::Query;

    std::size_t length() const { return ids.size(); }
};

struct SeqLimits {
    std::size_t query_max = 64;
    std::size_t code_max = 128;

    std::size_t max_for(SeqKind kind) const { return kind == SeqKind::Query ? query_max : code_max; }
};

/// Splits on whitespace/punctuation, then snake_case underscores, then
/// camelCase lower->upper boundaries; lowercases; drops empty fragments.
/// Throws EmptyAfterTokenize when nothing survives.
TokenSequence tokenize(const std::string& text, SeqKind kind);

/// Reserved ids plus every token with frequency >= min_freq, ordered by
/// (frequency desc, token asc).
Vocabulary build_vocab(const std::vector<TokenSequence>& corpus, int min_freq);

/// Unknown tokens map to kUnk; output truncated to the kind's max length.
IdSequence encode_ids(const TokenSequence& seq, const Vocabulary& vocab, const SeqLimits& limits = {});

// JSONL loading: one object per line, {"id": int, "query": str, "code": str}
// (codebase lines may omit "query"). csn_fields remaps docstring->query and
// synthesizes ids from line order for CodeSearchNet-style exports.
std::vector<RawPair> load_dataset(const std::string& path, bool csn_fields = false);
std::vector<CodeEntry> load_codebase(const std::string& path, bool csn_fields = false);

void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

} // namespace r2ps
