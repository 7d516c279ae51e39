#pragma once

// Read-out statistics of a rollout: Action S (mean total energy over steps
// 1..T, per patch) and Dissipation D (mean absolute per-step energy change,
// per patch), plus the per-patch roughness map of raw features.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "haad/dynamics.hpp"
#include "haad/numcore/mat.hpp"
#include "haad/numcore/sparse.hpp"

namespace haad::stats {

struct TrajStats {
    double s = 0.0;  // Action
    double d = 0.0;  // Dissipation
    /// D was defined as zero because the rollout has a single step.
    bool single_step = false;

    friend bool operator==(const TrajStats&, const TrajStats&) = default;
};

/// Scale factors shared by the plain and tape read-outs.
inline double action_scale(std::size_t steps, std::size_t n) {
    return 1.0 / (static_cast<double>(steps) * static_cast<double>(n));
}
inline double dissipation_scale(std::size_t steps, std::size_t n) {
    return 1.0 / (static_cast<double>(steps - 1) * static_cast<double>(n));
}

/// S from H_0..H_T (H_0 is ignored). Requires T >= 1, n >= 1.
double action_score(std::span<const double> hamiltonian, std::size_t n);
double action_score(const dyn::Trajectory& traj, std::size_t n);

/// D from H_0..H_T; zero with `single_step` set when T == 1.
double dissipation(std::span<const double> hamiltonian, std::size_t n, bool* single_step = nullptr);
double dissipation(const dyn::Trajectory& traj, std::size_t n, bool* single_step = nullptr);

TrajStats phys_features(const dyn::Trajectory& traj, std::size_t n);

/// Per-patch ||(L x)_i||, N x 1.
num::Mat roughness_map(const num::Mat& x, const num::SparseSym& l);
double mean_roughness(const num::Mat& x, const num::SparseSym& l);

/// CSV "patch,y,x,roughness".
void write_roughness_csv(std::ostream& os, const num::Mat& roughness, std::size_t w_p);

}  // namespace haad::stats
