#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "r2ps/errors.hpp"

namespace r2ps {

// Dense row-major matrix of doubles. Training and gradient checking run in
// 64-bit throughout; 32-bit floats appear only in persisted files.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    void assign(std::size_t r, std::size_t c) {
        rows = r;
        cols = c;
        data.assign(r * c, 0.0);
    }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// out (+)= a * b
void matmul_nn(const Mat& a, const Mat& b, Mat& out, bool accumulate = false);
// out (+)= a * b^T
void matmul_nt(const Mat& a, const Mat& b, Mat& out, bool accumulate = false);
// out (+)= a^T * b
void matmul_tn(const Mat& a, const Mat& b, Mat& out, bool accumulate = false);

struct ModelConfig {
    std::size_t dim = 32;
    std::size_t vocab = 0;
    std::size_t max_pos = 193; // >= query_max + 1 + code_max of the corpus limits
    std::uint64_t seed = 42;
};

/// All learnable tensors of one encoder. The scoring head (head_w, head_b)
/// exists only when has_head is set; the retrieval encoder scores by dot
/// product and carries no head.
struct EncoderParams {
    ModelConfig cfg;
    Mat tok;            // vocab x dim
    Mat pos;            // max_pos x dim, positions restart per segment
    Mat wq, wk, wv;     // dim x dim attention projections
    std::vector<double> head_w;
    double head_b = 0.0;
    bool has_head = false;
};

struct GradientSet {
    Mat tok, pos, wq, wk, wv;
    std::vector<double> head_w;
    double head_b = 0.0;
    bool has_head = false;

    void zero();
};

GradientSet make_gradients(const EncoderParams& p);
void accumulate(GradientSet& into, const GradientSet& delta);

struct TensorRef {
    const char* name;
    double* data;
    std::size_t size;
};

// Flat views over all learnable coordinates, in a fixed order shared by
// parameters and gradients (optimizer + finite differences rely on it).
std::vector<TensorRef> tensor_refs(EncoderParams& p);
std::vector<TensorRef> tensor_refs(GradientSet& g);
std::size_t param_count(const EncoderParams& p);

/// Entries i.i.d. uniform in [-0.1, 0.1] from xoshiro256** seeded with
/// cfg.seed; head bias starts at zero. Same seed, same bits.
EncoderParams init_params(const ModelConfig& cfg, bool with_head);

struct AttentionWorkspace {
    Mat q, k, v;   // T x d
    Mat attn;      // T x T, rows sum to 1; masked entries exactly 0
    Mat hidden;    // T x d
};

/// Single-head scaled dot-product self-attention.
/// mask: nullptr or T x T of {0, -inf} added to the pre-softmax scores.
void attention_forward(const Mat& h0, const EncoderParams& p, const Mat* mask, AttentionWorkspace& ws);

/// Reverse-mode step for attention_forward: accumulates dWq/dWk/dWv into g
/// and writes the gradient w.r.t. h0.
void attention_backward(const Mat& h0, const EncoderParams& p, const AttentionWorkspace& ws,
                        const Mat& dh, GradientSet& g, Mat& dh0);

// Everything the backward pass needs from one encoder forward.
struct EncodeTrace {
    std::vector<std::int32_t> ids;
    std::vector<std::int32_t> positions;
    Mat h0;
    AttentionWorkspace att;
    std::vector<double> pooled;
    double pooled_norm = 0.0;
    std::vector<double> out; // pooled, L2-normalized when requested
};

void encoder_forward(const EncoderParams& p, std::span<const std::int32_t> ids,
                     std::span<const std::int32_t> positions, bool l2_normalize, EncodeTrace& t);
void encoder_backward(const EncoderParams& p, const EncodeTrace& t, std::span<const double> d_out,
                      bool l2_normalize, GradientSet& g);

double head_forward(const EncoderParams& p, std::span<const double> pooled);
void head_backward(const EncoderParams& p, std::span<const double> pooled, double d_score,
                   GradientSet& g, std::vector<double>& d_pooled);

/// Additive mask that zeroes every cross-segment attention entry for the
/// concatenation of an l-token and an m-token segment.
Mat block_diagonal_mask(std::size_t l, std::size_t m);

/// Central-difference check of `analytic` against `loss` over a random
/// subsample of at least min(sample_coords, #params) coordinates. Relative
/// error uses denominator max(|fd|, |analytic|, 1e-8); returns the max.
double grad_check(EncoderParams& params, const std::function<double()>& loss, const GradientSet& analytic,
                  double eps, std::size_t sample_coords, std::uint64_t seed);

} // namespace r2ps
