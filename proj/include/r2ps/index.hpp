#pragma once

#include <string>
#include <vector>

#include "r2ps/encoders.hpp"

namespace r2ps {

/// Precomputed code-embedding matrix: the retriever's offline half. Rows are
/// stored f32 on disk and widened to f64 in memory for scoring.
struct EmbeddingIndex {
    std::vector<std::int64_t> ids;
    std::size_t dim = 0;
    std::vector<double> rows; // count x dim, row-major
    bool normalized = true;
    std::string fingerprint;  // hash of the dual checkpoint that produced it

    std::size_t count() const { return ids.size(); }
    const double* row(std::size_t i) const { return rows.data() + i * dim; }
};

struct RankedHit {
    std::int64_t id = 0;
    double score = 0.0;
    std::size_t rank = 0; // 1-based
};

/// Encodes every codebase entry in input order. Parallel across rows; row
/// content is independent of the worker count.
EmbeddingIndex build_index(const std::vector<CodeEntry>& codebase, const Vocabulary& vocab,
                           const SeqLimits& limits, const DualEncoder& dual, ForwardCounters* fc = nullptr);

/// Exact brute-force top-k by dot product; ties broken by ascending id.
/// Chunked scan with a per-chunk heap, merged in a fixed order.
std::vector<RankedHit> top_k(const EmbeddingIndex& index, const Embedding& query_emb, std::size_t k);

/// Serial reference for top_k: score everything, sort, cut. Kept for tests
/// and the kernel benchmark.
std::vector<RankedHit> top_k_serial(const EmbeddingIndex& index, const Embedding& query_emb, std::size_t k);

/// top_k with k = N: the full codebase ordering.
std::vector<RankedHit> full_ranking(const EmbeddingIndex& index, const Embedding& query_emb);

// Index file: magic "R2PSIDX1", u32 LE JSON header length, JSON header
// {dim, count, normalized, fingerprint, ids}, then count*dim LE f32 rows.
void save_index(const EmbeddingIndex& index, const std::string& path);
EmbeddingIndex load_index(const std::string& path);

bool fingerprint_matches(const EmbeddingIndex& index, const DualEncoder& dual);

} // namespace r2ps
