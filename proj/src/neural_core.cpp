#include "r2ps/neural_core.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "r2ps/rng.hpp"

namespace r2ps {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void matmul_nn(const Mat& a, const Mat& b, Mat& out, bool accumulate) {
    if (a.cols != b.rows) throw DimensionMismatch("matmul_nn shape mismatch");
    if (!accumulate) out.assign(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* orow = out.row(i);
        const double* arow = a.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
}

void matmul_nt(const Mat& a, const Mat& b, Mat& out, bool accumulate) {
    if (a.cols != b.cols) throw DimensionMismatch("matmul_nt shape mismatch");
    if (!accumulate) out.assign(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* orow = out.row(i);
        const double* arow = a.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            orow[j] += acc;
        }
    }
}

void matmul_tn(const Mat& a, const Mat& b, Mat& out, bool accumulate) {
    if (a.rows != b.rows) throw DimensionMismatch("matmul_tn shape mismatch");
    if (!accumulate) out.assign(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            double* orow = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
        }
    }
}

void GradientSet::zero() {
    tok.zero();
    pos.zero();
    wq.zero();
    wk.zero();
    wv.zero();
    std::fill(head_w.begin(), head_w.end(), 0.0);
    head_b = 0.0;
}

GradientSet make_gradients(const EncoderParams& p) {
    GradientSet g;
    g.tok.assign(p.tok.rows, p.tok.cols);
    g.pos.assign(p.pos.rows, p.pos.cols);
    g.wq.assign(p.wq.rows, p.wq.cols);
    g.wk.assign(p.wk.rows, p.wk.cols);
    g.wv.assign(p.wv.rows, p.wv.cols);
    g.has_head = p.has_head;
    if (p.has_head) g.head_w.assign(p.head_w.size(), 0.0);
    return g;
}

void accumulate(GradientSet& into, const GradientSet& delta) {
    auto axpy = [](std::vector<double>& dst, const std::vector<double>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    axpy(into.tok.data, delta.tok.data);
    axpy(into.pos.data, delta.pos.data);
    axpy(into.wq.data, delta.wq.data);
    axpy(into.wk.data, delta.wk.data);
    axpy(into.wv.data, delta.wv.data);
    axpy(into.head_w, delta.head_w);
    into.head_b += delta.head_b;
}

template <typename T>
static std::vector<TensorRef> refs_impl(T& p, bool has_head) {
    std::vector<TensorRef> r = {
        {"tok", p.tok.data.data(), p.tok.data.size()},
        {"pos", p.pos.data.data(), p.pos.data.size()},
        {"wq", p.wq.data.data(), p.wq.data.size()},
        {"wk", p.wk.data.data(), p.wk.data.size()},
        {"wv", p.wv.data.data(), p.wv.data.size()},
    };
    if (has_head) {
        r.push_back({"head_w", p.head_w.data(), p.head_w.size()});
        r.push_back({"head_b", &p.head_b, 1});
    }
    return r;
}

std::vector<TensorRef> tensor_refs(EncoderParams& p) { return refs_impl(p, p.has_head); }
std::vector<TensorRef> tensor_refs(GradientSet& g) { return refs_impl(g, g.has_head); }

std::size_t param_count(const EncoderParams& p) {
    std::size_t n = 0;
    for (const auto& r : tensor_refs(const_cast<EncoderParams&>(p))) n += r.size;
    return n;
}

EncoderParams init_params(const ModelConfig& cfg, bool with_head) {
    if (cfg.dim < 1) throw PreconditionViolation("model dim must be >= 1");
    if (cfg.vocab < 4) throw PreconditionViolation("vocab must include the reserved ids");
    EncoderParams p;
    p.cfg = cfg;
    p.tok.assign(cfg.vocab, cfg.dim);
    p.pos.assign(cfg.max_pos, cfg.dim);
    p.wq.assign(cfg.dim, cfg.dim);
    p.wk.assign(cfg.dim, cfg.dim);
    p.wv.assign(cfg.dim, cfg.dim);
    p.has_head = with_head;
    if (with_head) p.head_w.assign(cfg.dim, 0.0);
    Rng rng(cfg.seed);
    for (auto& ref : tensor_refs(p)) {
        if (std::strcmp(ref.name, "head_b") == 0) continue; // bias stays 0
        for (std::size_t i = 0; i < ref.size; ++i) ref.data[i] = rng.uniform(-0.1, 0.1);
    }
    return p;
}

void attention_forward(const Mat& h0, const EncoderParams& p, const Mat* mask, AttentionWorkspace& ws) {
    const std::size_t T = h0.rows;
    const std::size_t d = p.cfg.dim;
    if (T < 1) throw PreconditionViolation("attention requires at least one token");
    if (h0.cols != d) throw DimensionMismatch("input width does not match model dim");
    if (mask && (mask->rows != T || mask->cols != T)) throw DimensionMismatch("mask must be T x T");

    matmul_nn(h0, p.wq, ws.q);
    matmul_nn(h0, p.wk, ws.k);
    matmul_nn(h0, p.wv, ws.v);
    matmul_nt(ws.q, ws.k, ws.attn);

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < T; ++i) {
        double* row = ws.attn.row(i);
        double mx = kNegInf;
        for (std::size_t j = 0; j < T; ++j) {
            row[j] *= inv_sqrt_d;
            if (mask) row[j] += mask->row(i)[j];
            if (row[j] > mx) mx = row[j];
        }
        if (!std::isfinite(mx)) throw AllMaskedRow("attention row " + std::to_string(i) + " is fully masked");
        double sum = 0.0;
        for (std::size_t j = 0; j < T; ++j) {
            row[j] = std::exp(row[j] - mx); // exp(-inf) == 0, masked entries stay exactly 0
            sum += row[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < T; ++j) row[j] *= inv;
    }
    matmul_nn(ws.attn, ws.v, ws.hidden);
}

void attention_backward(const Mat& h0, const EncoderParams& p, const AttentionWorkspace& ws,
                        const Mat& dh, GradientSet& g, Mat& dh0) {
    const std::size_t T = h0.rows;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(p.cfg.dim));

    Mat da;
    matmul_nt(dh, ws.v, da); // T x T
    Mat dv;
    matmul_tn(ws.attn, dh, dv); // T x d

    // Softmax rows: ds = a .* (da - <da, a>). Masked entries have a == 0.
    Mat ds(T, T);
    for (std::size_t i = 0; i < T; ++i) {
        const double* a = ws.attn.row(i);
        const double* dai = da.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < T; ++j) dot += dai[j] * a[j];
        double* dsi = ds.row(i);
        for (std::size_t j = 0; j < T; ++j) dsi[j] = a[j] * (dai[j] - dot) * inv_sqrt_d;
    }

    Mat dq;
    matmul_nn(ds, ws.k, dq);
    Mat dk;
    matmul_tn(ds, ws.q, dk);

    matmul_tn(h0, dq, g.wq, true);
    matmul_tn(h0, dk, g.wk, true);
    matmul_tn(h0, dv, g.wv, true);

    dh0.assign(T, p.cfg.dim);
    matmul_nt(dq, p.wq, dh0, true);
    matmul_nt(dk, p.wk, dh0, true);
    matmul_nt(dv, p.wv, dh0, true);
}

void encoder_forward(const EncoderParams& p, std::span<const std::int32_t> ids,
                     std::span<const std::int32_t> positions, bool l2_normalize, EncodeTrace& t) {
    const std::size_t T = ids.size();
    if (T == 0) throw EmptySequence("cannot encode an empty id sequence");
    if (positions.size() != T) throw DimensionMismatch("ids and positions differ in length");
    const std::size_t d = p.cfg.dim;

    t.ids.assign(ids.begin(), ids.end());
    t.positions.assign(positions.begin(), positions.end());
    t.h0.assign(T, d);
    for (std::size_t i = 0; i < T; ++i) {
        const auto id = ids[i];
        const auto ps = positions[i];
        if (id < 0 || static_cast<std::size_t>(id) >= p.cfg.vocab)
            throw Error("token id out of range: " + std::to_string(id));
        if (ps < 0 || static_cast<std::size_t>(ps) >= p.cfg.max_pos)
            throw SequenceTooLong("position " + std::to_string(ps) + " exceeds max_pos");
        const double* trow = p.tok.row(static_cast<std::size_t>(id));
        const double* prow = p.pos.row(static_cast<std::size_t>(ps));
        double* hrow = t.h0.row(i);
        for (std::size_t j = 0; j < d; ++j) hrow[j] = trow[j] + prow[j];
    }

    attention_forward(t.h0, p, nullptr, t.att);

    t.pooled.assign(d, 0.0);
    for (std::size_t i = 0; i < T; ++i) {
        const double* hrow = t.att.hidden.row(i);
        for (std::size_t j = 0; j < d; ++j) t.pooled[j] += hrow[j];
    }
    const double inv_t = 1.0 / static_cast<double>(T);
    for (std::size_t j = 0; j < d; ++j) t.pooled[j] *= inv_t;

    double sq = 0.0;
    for (double x : t.pooled) sq += x * x;
    t.pooled_norm = std::sqrt(sq);

    t.out = t.pooled;
    if (l2_normalize && t.pooled_norm > 0.0) {
        const double inv = 1.0 / t.pooled_norm;
        for (double& x : t.out) x *= inv;
    }
}

void encoder_backward(const EncoderParams& p, const EncodeTrace& t, std::span<const double> d_out,
                      bool l2_normalize, GradientSet& g) {
    const std::size_t T = t.ids.size();
    const std::size_t d = p.cfg.dim;
    if (d_out.size() != d) throw DimensionMismatch("gradient width does not match model dim");

    std::vector<double> d_pooled(d);
    if (l2_normalize && t.pooled_norm > 0.0) {
        // e = pooled / n  =>  d_pooled = (d_out - e * <d_out, e>) / n
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += d_out[j] * t.out[j];
        const double inv = 1.0 / t.pooled_norm;
        for (std::size_t j = 0; j < d; ++j) d_pooled[j] = (d_out[j] - t.out[j] * dot) * inv;
    } else {
        for (std::size_t j = 0; j < d; ++j) d_pooled[j] = d_out[j];
    }

    Mat dh(T, d);
    const double inv_t = 1.0 / static_cast<double>(T);
    for (std::size_t i = 0; i < T; ++i) {
        double* row = dh.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = d_pooled[j] * inv_t;
    }

    Mat dh0;
    attention_backward(t.h0, p, t.att, dh, g, dh0);

    for (std::size_t i = 0; i < T; ++i) {
        const double* src = dh0.row(i);
        double* gtok = g.tok.row(static_cast<std::size_t>(t.ids[i]));
        double* gpos = g.pos.row(static_cast<std::size_t>(t.positions[i]));
        for (std::size_t j = 0; j < d; ++j) {
            gtok[j] += src[j];
            gpos[j] += src[j];
        }
    }
}

double head_forward(const EncoderParams& p, std::span<const double> pooled) {
    if (!p.has_head) throw PreconditionViolation("encoder has no scoring head");
    if (pooled.size() != p.head_w.size()) throw DimensionMismatch("head width mismatch");
    double s = p.head_b;
    for (std::size_t j = 0; j < pooled.size(); ++j) s += p.head_w[j] * pooled[j];
    return s;
}

void head_backward(const EncoderParams& p, std::span<const double> pooled, double d_score,
                   GradientSet& g, std::vector<double>& d_pooled) {
    d_pooled.assign(pooled.size(), 0.0);
    for (std::size_t j = 0; j < pooled.size(); ++j) {
        g.head_w[j] += pooled[j] * d_score;
        d_pooled[j] = p.head_w[j] * d_score;
    }
    g.head_b += d_score;
}

Mat block_diagonal_mask(std::size_t l, std::size_t m) {
    const std::size_t T = l + m;
    Mat mask(T, T, 0.0);
    for (std::size_t i = 0; i < T; ++i) {
        const bool i_query = i < l;
        for (std::size_t j = 0; j < T; ++j) {
            const bool j_query = j < l;
            if (i_query != j_query) mask.at(i, j) = kNegInf;
        }
    }
    return mask;
}

double grad_check(EncoderParams& params, const std::function<double()>& loss, const GradientSet& analytic,
                  double eps, std::size_t sample_coords, std::uint64_t seed) {
    if (!(eps > 0.0 && eps <= 1e-3)) throw PreconditionViolation("eps must lie in (0, 1e-3]");
    auto prefs = tensor_refs(params);
    auto grefs = tensor_refs(const_cast<GradientSet&>(analytic));
    std::size_t total = 0;
    for (const auto& r : prefs) total += r.size;

    const std::size_t n = std::min(total, std::max<std::size_t>(sample_coords, 200));
    Rng rng(seed);
    double max_rel = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t flat = (n == total) ? s : static_cast<std::size_t>(rng.bounded(total));
        std::size_t t = 0;
        while (flat >= prefs[t].size) {
            flat -= prefs[t].size;
            ++t;
        }
        double* x = prefs[t].data + flat;
        const double orig = *x;
        *x = orig + eps;
        const double lp = loss();
        *x = orig - eps;
        const double lm = loss();
        *x = orig;
        const double fd = (lp - lm) / (2.0 * eps);
        const double an = grefs[t].data[flat];
        const double denom = std::max(std::max(std::abs(fd), std::abs(an)), 1e-8);
        const double rel = std::abs(fd - an) / denom;
        if (rel > max_rel) max_rel = rel;
    }
    return max_rel;
}

} // namespace r2ps
