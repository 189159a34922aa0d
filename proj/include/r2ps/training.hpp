#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "r2ps/encoders.hpp"
#include "r2ps/index.hpp"
#include "r2ps/rng.hpp"

namespace r2ps {

struct TrainingConfig {
    double tau = 0.05;          // InfoNCE temperature
    std::size_t n_neg = 32;     // negatives per query for sampled training
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    double learning_rate = 1e-3; // toy-scale default; decays linearly to 0
    std::uint64_t seed = 42;
};

/// Rank-window negative sampling: the gold code is removed first, then
/// candidates come from the contiguous window [start_rank, start_rank+window)
/// of the remaining ranking, so start_rank 1 means "hardest non-gold".
struct PsConfig {
    std::size_t start_rank = 1;
    std::size_t window = 100;
    std::size_t n_neg = 32;
};

struct PairExample {
    std::int64_t id = 0;
    IdSequence query;
    IdSequence code;
};

struct NegExample {
    std::int64_t query_id = 0;
    std::int64_t positive_id = 0;
    IdSequence query;
    IdSequence positive;
    std::vector<std::int64_t> negative_ids;
    std::vector<IdSequence> negatives;
};

std::vector<PairExample> encode_pairs(const std::vector<RawPair>& pairs, const Vocabulary& vocab,
                                      const SeqLimits& limits);

/// loss = -log( e^{pos/tau} / (e^{pos/tau} + sum_i e^{neg_i/tau}) ),
/// evaluated through the shifted log-sum-exp so it is exactly non-negative.
double info_nce(double pos, std::span<const double> negs, double tau);
void info_nce_grad(double pos, std::span<const double> negs, double tau, double& d_pos,
                   std::span<double> d_negs);

/// Every other code in the batch becomes a negative (m = b - 1).
std::vector<NegExample> in_batch_negatives(const std::vector<PairExample>& batch);

std::vector<std::int64_t> ps_sample(std::int64_t query_id, std::int64_t gold_id,
                                    std::span<const std::int64_t> ranking, const PsConfig& cfg, Rng& rng);

// Adam with the standard bias correction; steps with a zero gradient leave
// the parameters bit-identical.
struct AdamState {
    GradientSet m, v;
    std::uint64_t t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};
AdamState make_adam(const EncoderParams& p);
void adam_step(EncoderParams& p, const GradientSet& g, AdamState& s, double lr);

struct TrainLog {
    std::vector<double> epoch_mean_loss;
};

// Batch objectives (mean per-example loss). Exposed for gradient checking.
// Gradient reduction is per-example in a fixed order, so results are
// bit-identical for any worker count.
double dual_batch_objective(const EncoderParams& params, const std::vector<const PairExample*>& batch,
                            double tau, bool normalize, GradientSet* grads);
double cross_batch_objective(const EncoderParams& params, const std::vector<NegExample>& batch,
                             double tau, GradientSet* grads);

DualEncoder train_dual(const std::vector<RawPair>& dataset, const Vocabulary& vocab, const SeqLimits& limits,
                       const ModelConfig& model, const TrainingConfig& cfg, bool normalize = true,
                       TrainLog* log = nullptr);

/// Stage two: negatives are drawn per epoch from the frozen dual encoder's
/// rankings over the training codebase.
CrossEncoder train_cross(const std::vector<RawPair>& dataset, const DualEncoder& dual,
                         const EmbeddingIndex& train_index, const Vocabulary& vocab, const SeqLimits& limits,
                         const TrainingConfig& cfg, const PsConfig& ps, TrainLog* log = nullptr);

/// Baseline joint recipe: both encoders step on the same in-batch negatives,
/// losses summed. Parameters are disjoint, so the dual half reproduces
/// train_dual bit-for-bit under the same seed.
std::pair<DualEncoder, CrossEncoder> train_rr_joint(const std::vector<RawPair>& dataset, const Vocabulary& vocab,
                                                    const SeqLimits& limits, const ModelConfig& model,
                                                    const TrainingConfig& cfg, bool normalize = true,
                                                    TrainLog* dual_log = nullptr, TrainLog* cross_log = nullptr);

} // namespace r2ps
