#pragma once

// Classifier read-out, losses, Adam, the training loop and the gradient
// certification harness. Gradients are taken by unrolling the full rollout on
// a tape, one tape per sample, and summed in sample order.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "haad/dataset.hpp"
#include "haad/dynamics.hpp"
#include "haad/numcore/mat.hpp"
#include "haad/numcore/sparse.hpp"
#include "haad/numcore/tape.hpp"
#include "haad/potential.hpp"
#include "haad/trajstats.hpp"

namespace haad::train {

using num::Mat;
using num::SparseSym;
using potential::Classifier;
using potential::PotentialModel;
using stats::TrajStats;

inline constexpr double kProbClamp = 1e-12;

struct LossConfig {
    double lambda = 1.0;
    double gamma = 1.0;

    void validate() const;

    friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;

    friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct OptimState {
    AdamConfig cfg;
    std::size_t step = 0;
    std::vector<Mat> m;
    std::vector<Mat> v;

    static OptimState init(const PotentialModel& model, const AdamConfig& cfg);
};

struct LossBreakdown {
    double total = 0.0;
    double cls = 0.0;
    double phy = 0.0;
    double real_term = 0.0;
    double fake_term = 0.0;
    bool real_empty = false;
    bool fake_empty = false;
};

/// w . [S, D] + b
double logit(const TrajStats& f, const Classifier& c);
/// sigmoid(logit)
double classify(const TrajStats& f, const Classifier& c);
/// Binary cross-entropy with yhat clamped to [1e-12, 1 - 1e-12].
double bce_loss(double yhat, int y);
/// The same loss from the logit: -clamp(log sigmoid(+-z)).
double bce_from_logit(double z, int y);
/// Mean of S + D; 0 with `empty` set for an empty batch.
double l_real(std::span<const TrajStats> real, bool* empty = nullptr);
/// Mean of max(0, gamma - S); 0 with `empty` set for an empty batch.
double l_fake(std::span<const TrajStats> fake, double gamma, bool* empty = nullptr);
/// Loss of a labeled batch from its read-outs. `labels` are 0/1.
LossBreakdown total_loss(std::span<const TrajStats> stats, std::span<const std::uint8_t> labels,
                         const Classifier& c, const LossConfig& cfg);

struct SampleScore {
    TrajStats stats;
    double logit = 0.0;
    double prob = 0.5;
};

/// Plain (non-differentiable) read-out of one sample.
SampleScore score_sample(const PotentialModel& model, const Mat& x, const SparseSym& l,
                         const dyn::RolloutConfig& rollout);
std::vector<SampleScore> score_dataset(const PotentialModel& model, const Dataset& data, const SparseSym& l,
                                       const dyn::RolloutConfig& rollout, std::size_t threads = 1);

/// Plain loss of a batch, recomputed without the tape.
LossBreakdown batch_loss(const PotentialModel& model, const Dataset& data, std::span<const std::size_t> batch,
                         const SparseSym& l, const dyn::RolloutConfig& rollout, const LossConfig& loss);

// ---- tape ------------------------------------------------------------------

struct TapeReadout {
    num::Var s;
    num::Var d;
    num::Var logit;
    bool single_step = false;
};

/// S, D and the classifier logit of one sample, recorded on `tape`.
TapeReadout readout_on_tape(num::Tape& tape, const potential::ModelVars& vars,
                            const potential::PotentialConfig& pcfg, num::Var x, const SparseSym& l,
                            const dyn::RolloutConfig& rollout);

/// Per-sample coefficients of the batch loss:
/// cls_weight * BCE + phys_weight * (S + D)           for a real sample,
/// cls_weight * BCE + phys_weight * max(0, gamma - S)  for a fake one.
struct SampleWeights {
    double cls_weight = 0.0;
    double phys_weight = 0.0;
    double gamma = 1.0;
};

struct SampleGrad {
    SampleScore score;
    double contribution = 0.0;
    /// Aligned with PotentialModel::parameters().
    std::vector<Mat> grads;
};

SampleGrad sample_gradient(const PotentialModel& model, const Mat& x, std::uint8_t label, const SparseSym& l,
                           const dyn::RolloutConfig& rollout, const SampleWeights& w);

struct BatchGrad {
    LossBreakdown loss;
    std::vector<Mat> grads;
};

/// Loss and its gradient w.r.t. every parameter. `threads` > 1 splits the
/// per-sample work; the reduction is always in batch order.
BatchGrad loss_and_grad(const PotentialModel& model, const Dataset& data, std::span<const std::size_t> batch,
                        const SparseSym& l, const dyn::RolloutConfig& rollout, const LossConfig& loss,
                        std::size_t threads = 1);

/// One Adam update. Throws NumericFault naming the parameter on a non-finite
/// gradient, before any parameter is modified.
void adam_update(PotentialModel& model, OptimState& state, const std::vector<Mat>& grads);

LossBreakdown train_step(PotentialModel& model, const Dataset& data, std::span<const std::size_t> batch,
                         OptimState& optim, const SparseSym& l, const dyn::RolloutConfig& rollout,
                         const LossConfig& loss, std::size_t threads = 1);

// ---- loop ------------------------------------------------------------------

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    potential::ModelShape shape;
    potential::PotentialConfig potential;
    dyn::RolloutConfig rollout;
    LossConfig loss;
    AdamConfig adam;
    std::size_t threads = 1;

    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0;
    LossBreakdown loss;
    /// Validation AUC of the logits; NaN without a validation set.
    double auc = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    PotentialModel model;
    std::vector<EpochLog> history;
};

/// Initial model for a config: init_model(shape, seed) with its potential
/// weights.
PotentialModel initial_model(const TrainConfig& cfg);

/// Seeded shuffled mini-batches; the last batch of an epoch may be short.
/// Throws ConfigError unless `data` holds both classes and no unlabeled sample.
TrainResult train(const Dataset& data, const Dataset* validation, const SparseSym& l, const TrainConfig& cfg);
TrainResult train(const Dataset& data, const Dataset* validation, const SparseSym& l, const TrainConfig& cfg,
                  PotentialModel start);

/// CSV "epoch,total,cls,phy,auc".
void write_history_csv(std::ostream& os, const std::vector<EpochLog>& history);

// ---- gradient certification ------------------------------------------------

struct GradCheckOptions {
    std::uint64_t seed = 0;
    double h = 1e-5;
    double tolerance = 1e-6;
    /// Test hook: scales the analytic gradient of this group by
    /// (1 + corrupt_scale) before comparison.
    std::string corrupt_group;
    double corrupt_scale = 1e-3;
    dyn::RolloutConfig rollout;
    /// Toy draws with a ReLU, |dH|, hinge or clamp site closer than this to
    /// its kink are redrawn.
    double kink_margin = 1e-3;
};

struct GroupCheck {
    std::string group;
    std::size_t coords = 0;
    double rel_error = 0.0;
    bool pass = false;
};

struct GradCheckReport {
    std::uint64_t seed = 0;
    std::vector<GroupCheck> groups;
    /// Toy draws rejected for a kink closer than `kink_margin`.
    std::size_t redraws = 0;
    bool pass = false;
};

/// Tape gradient vs. central differences of the plain batch loss on a 2x2
/// grid toy model (d_in 3, d_phy 4, mass hidden 5, two real and two fake
/// samples, hinge active). Relative error is per parameter group.
GradCheckReport gradcheck_toy(const GradCheckOptions& opts);

}  // namespace haad::train
