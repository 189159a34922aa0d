#include "r2ps/encoders.hpp"

namespace r2ps {

namespace {

std::vector<std::int32_t> iota_positions(std::size_t n) {
    std::vector<std::int32_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::int32_t>(i);
    return p;
}

void count_dual(ForwardCounters* fc, SeqKind kind) {
    if (!fc) return;
    if (kind == SeqKind::Query)
        fc->dual_query.fetch_add(1, std::memory_order_relaxed);
    else
        fc->dual_code.fetch_add(1, std::memory_order_relaxed);
}

} // namespace

Embedding encode_traced(const DualEncoder& enc, const IdSequence& seq, EncodeTrace& trace, ForwardCounters* fc) {
    if (seq.ids.empty()) throw EmptySequence("cannot encode an empty sequence");
    const auto positions = iota_positions(seq.ids.size());
    encoder_forward(enc.params, seq.ids, positions, enc.normalize, trace);
    count_dual(fc, seq.kind);
    return trace.out;
}

Embedding encode(const DualEncoder& enc, const IdSequence& seq, ForwardCounters* fc) {
    EncodeTrace trace;
    return encode_traced(enc, seq, trace, fc);
}

double score_dual(const Embedding& query_emb, const Embedding& code_emb) {
    if (query_emb.size() != code_emb.size()) throw DimensionMismatch("embedding dimensions differ");
    double s = 0.0;
    for (std::size_t i = 0; i < query_emb.size(); ++i) s += query_emb[i] * code_emb[i];
    return s;
}

void cross_input(const IdSequence& query, const IdSequence& code, std::size_t max_pos,
                 std::vector<std::int32_t>& ids, std::vector<std::int32_t>& positions) {
    if (query.ids.empty() || code.ids.empty()) throw EmptySequence("cross input requires non-empty query and code");
    const std::size_t l = query.ids.size();
    const std::size_t m = code.ids.size();
    if (l + 1 + m > max_pos)
        throw SequenceTooLong("joint sequence length " + std::to_string(l + 1 + m) + " exceeds max_pos " +
                              std::to_string(max_pos));
    ids.clear();
    positions.clear();
    ids.reserve(l + m + 2);
    positions.reserve(l + m + 2);
    ids.push_back(Vocabulary::kCls);
    positions.push_back(0);
    for (std::size_t i = 0; i < l; ++i) {
        ids.push_back(query.ids[i]);
        positions.push_back(static_cast<std::int32_t>(i + 1));
    }
    ids.push_back(Vocabulary::kSep);
    positions.push_back(0);
    for (std::size_t i = 0; i < m; ++i) {
        ids.push_back(code.ids[i]);
        positions.push_back(static_cast<std::int32_t>(i + 1));
    }
}

double score_cross_traced(const CrossEncoder& enc, const IdSequence& query, const IdSequence& code,
                          EncodeTrace& trace, ForwardCounters* fc) {
    std::vector<std::int32_t> ids, positions;
    cross_input(query, code, enc.params.cfg.max_pos, ids, positions);
    encoder_forward(enc.params, ids, positions, /*l2_normalize=*/false, trace);
    if (fc) fc->cross.fetch_add(1, std::memory_order_relaxed);
    return head_forward(enc.params, trace.pooled);
}

double score_cross(const CrossEncoder& enc, const IdSequence& query, const IdSequence& code, ForwardCounters* fc) {
    EncodeTrace trace;
    return score_cross_traced(enc, query, code, trace, fc);
}

} // namespace r2ps
