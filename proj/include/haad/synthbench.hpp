#pragma once

// Synthetic stand-in for backbone features: smooth "real" grids, fakes with a
// spliced rectangle of unsmoothed noise, detection metrics, and the
// sensitivity / solver experiments.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "haad/dataset.hpp"
#include "haad/dynamics.hpp"
#include "haad/numcore/mat.hpp"
#include "haad/numcore/sparse.hpp"
#include "haad/training.hpp"

namespace haad::synth {

using num::Mat;

struct SynthConfig {
    std::size_t h_p = 8;
    std::size_t w_p = 8;
    std::size_t d_in = 32;
    /// Chebyshev radius of the box average, in patches.
    double smooth_len = 1.0;
    /// Number of box-average passes.
    std::size_t smooth_passes = 2;
    double artifact_frac = 0.25;
    double artifact_gain = 1.0;
    std::size_t n_train = 400;
    std::size_t n_val = 200;
    std::uint64_t seed = 0;
    /// Fakes are independent real draws (no artifact at all).
    bool null_control = false;
    /// Leading channels left unsmoothed in both classes (nuisance roughness).
    std::size_t texture_channels = 0;

    /// Throws ConfigError on an invalid field.
    void validate() const;
    std::size_t patches() const noexcept { return h_p * w_p; }
};

struct Rect {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    bool contains(std::size_t r, std::size_t c) const noexcept {
        return r >= row && r < row + height && c >= col && c < col + width;
    }
    std::size_t area() const noexcept { return height * width; }
};

struct FakeSample {
    Mat x;
    /// Empty (area 0) for null-control draws.
    Rect region;
};

/// Box-average smoothing over the grid; boundary patches average over the
/// in-grid part of their window.
Mat smooth_grid(const Mat& x, std::size_t h_p, std::size_t w_p, std::size_t radius, std::size_t passes);
/// Each column shifted to mean 0 and scaled to population std 1 (constant
/// columns are only centred).
void standardize_columns(Mat& x);
/// Rectangle of round(artifact_frac * N) patches (as square as the grid
/// allows) for the given grid.
std::pair<std::size_t, std::size_t> artifact_extent(const SynthConfig& cfg);

Mat gen_real(const SynthConfig& cfg, std::uint64_t index);
FakeSample gen_fake_sample(const SynthConfig& cfg, std::uint64_t index);
Mat gen_fake(const SynthConfig& cfg, std::uint64_t index);

/// n samples alternating real (even positions) and fake (odd), drawn with
/// indices first_index, first_index + 1, ...
Dataset make_dataset(const SynthConfig& cfg, std::size_t n, std::uint64_t first_index);
/// Train split uses indices [0, n_train), validation [n_train, n_train + n_val).
std::pair<Dataset, Dataset> make_split(const SynthConfig& cfg);

num::SparseSym grid_laplacian(std::size_t h_p, std::size_t w_p);

struct EvalSummary {
    double auc = 0.0;
    double acc = 0.0;
    double s_only_auc = 0.0;
    double median_s_real = 0.0;
    double median_s_fake = 0.0;
    double median_d_real = 0.0;
    double median_d_fake = 0.0;
    std::vector<train::SampleScore> scores;
};

/// Scores every sample; metrics need both labels present.
EvalSummary evaluate(const potential::PotentialModel& model, const Dataset& data, const num::SparseSym& l,
                     const dyn::RolloutConfig& rollout, std::size_t threads = 1);

struct BenchReport {
    EvalSummary val;
    std::vector<train::EpochLog> history;
    potential::PotentialModel model;
    double runtime_seconds = 0.0;
};

/// Generates the split, trains, evaluates on validation. When `out_dir` is
/// non-empty, writes s_histogram.csv, trajectories_real.csv and
/// trajectories_fake.csv there.
BenchReport run_benchmark(const SynthConfig& cfg, const train::TrainConfig& tcfg, const std::string& out_dir = {});

/// CSV "bin_lo,bin_hi,real,fake" of S over `bins` equal-width bins.
void write_s_histogram_csv(std::ostream& os, const std::vector<train::SampleScore>& scores,
                           const std::vector<std::uint8_t>& labels, std::size_t bins = 20);
/// CSV "sample,step,H,T_kin,V" for every sample carrying `label`.
void write_class_trajectories_csv(std::ostream& os, const potential::PotentialModel& model, const Dataset& data,
                                  const num::SparseSym& l, const dyn::RolloutConfig& rollout, std::uint8_t label);

struct SolverRow {
    dyn::Integrator integrator = dyn::Integrator::SymplecticEuler;
    double auc = 0.0;
    std::size_t grad_evals = 0;
    double wall_seconds = 0.0;
    double max_drift = 0.0;
};

/// Frozen harmonic test: V = 1/2 |q|^2 from q = 1, p = 0, identity mass.
double harmonic_max_drift(dyn::Integrator kind, std::size_t steps, double eta);

/// Per integrator: validation AUC of the given model, total force
/// evaluations and wall time over the validation rollouts (best of `repeats`),
/// and the harmonic drift (1000 steps, eta 0.1).
std::vector<SolverRow> solver_comparison(const potential::PotentialModel& model, const Dataset& val,
                                         const num::SparseSym& l, const dyn::RolloutConfig& base,
                                         std::size_t repeats = 3);
void write_solver_csv(std::ostream& os, const std::vector<SolverRow>& rows);

enum class SweepParam { Steps, Eta, Lambda };
SweepParam parse_sweep_param(const std::string& name);
std::string to_string(SweepParam p);

struct SweepRow {
    double value = 0.0;
    double auc = 0.0;
};

/// Re-trains per value (same seeds) and reports validation AUC.
std::vector<SweepRow> sweep(SweepParam param, const std::vector<double>& values, const SynthConfig& cfg,
                            const train::TrainConfig& tcfg);
void write_sweep_csv(std::ostream& os, SweepParam param, const std::vector<SweepRow>& rows);

}  // namespace haad::synth
