#pragma once

#include <vector>

#include "r2ps/corpus.hpp"
#include "r2ps/counters.hpp"
#include "r2ps/neural_core.hpp"

namespace r2ps {

using Embedding = std::vector<double>;

/// Retrieval encoder: query and code share this single parameter set and are
/// scored by dot product of their pooled embeddings.
struct DualEncoder {
    EncoderParams params;
    bool normalize = true;
};

/// Joint encoder: scores the [CLS] query [SEP] code concatenation through a
/// linear head. Its parameters are disjoint from any DualEncoder.
struct CrossEncoder {
    EncoderParams params; // has_head == true
};

Embedding encode(const DualEncoder& enc, const IdSequence& seq, ForwardCounters* fc = nullptr);
Embedding encode_traced(const DualEncoder& enc, const IdSequence& seq, EncodeTrace& trace,
                        ForwardCounters* fc = nullptr);

double score_dual(const Embedding& query_emb, const Embedding& code_emb);

double score_cross(const CrossEncoder& enc, const IdSequence& query, const IdSequence& code,
                   ForwardCounters* fc = nullptr);
double score_cross_traced(const CrossEncoder& enc, const IdSequence& query, const IdSequence& code,
                          EncodeTrace& trace, ForwardCounters* fc = nullptr);

/// Joint input assembly: ids [CLS] q [SEP] c with positions restarting at
/// each segment so the shared position table sees the same offsets as in the
/// separate encoders. Throws SequenceTooLong when l + 1 + m > max_pos.
void cross_input(const IdSequence& query, const IdSequence& code, std::size_t max_pos,
                 std::vector<std::int32_t>& ids, std::vector<std::int32_t>& positions);

} // namespace r2ps
