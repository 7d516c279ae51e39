#pragma once

// Rollouts on the learned potential and on analytic test potentials, plus the
// phase-space diagnostics: Jacobian-determinant probe, omitted variable-mass
// term ratio, and 2-D landscape slices.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "haad/integrator_core.hpp"
#include "haad/numcore/mat.hpp"
#include "haad/numcore/sparse.hpp"
#include "haad/potential.hpp"

namespace haad::dyn {

using num::Mat;
using num::SparseSym;

enum class MassMode { Learned, Identity };

inline constexpr std::size_t kDefaultSteps = 4;
inline constexpr double kDefaultEta = 0.4;

struct RolloutConfig {
    std::size_t steps = kDefaultSteps;
    double eta = kDefaultEta;
    Integrator integrator = Integrator::SymplecticEuler;
    MassMode mass_mode = MassMode::Learned;

    /// Throws ConfigError unless steps >= 1 and eta > 0.
    void validate() const;

    friend bool operator==(const RolloutConfig&, const RolloutConfig&) = default;
};

std::string to_string(Integrator kind);
std::string to_string(MassMode mode);
/// Accepts "symplectic_euler" (or "symplectic"), "euler", "rk4".
Integrator parse_integrator(const std::string& name);
MassMode parse_mass_mode(const std::string& name);

using PhysState = StateOf<Mat>;

struct Trajectory {
    std::vector<PhysState> states;   // T + 1 snapshots
    std::vector<double> hamiltonian;  // H_t = kinetic_t + potential_t
    std::vector<double> kinetic;
    std::vector<double> potential;
    std::size_t grad_evals = 0;

    std::size_t steps() const noexcept { return hamiltonian.empty() ? 0 : hamiltonian.size() - 1; }
};

/// Returns -grad V(q).
using ForceFn = std::function<Mat(const Mat& q)>;
/// Returns M^{-1}(q) as an N x 1 per-patch column or a full q-shaped matrix.
/// An empty function means the identity.
using MassFn = std::function<Mat(const Mat& q)>;
using PotentialFn = std::function<double(const Mat& q)>;

double kinetic_energy(const Mat& p);
/// 1/2 ||p||^2 + V
double hamiltonian(const PhysState& s, double potential_value);

/// Single steps. `grad_evals` (optional) is incremented by the number of
/// force evaluations. Non-finite forces raise NumericFault.
PhysState step_symplectic(const PhysState& s, const ForceFn& force, const MassFn& mass, double eta,
                          std::size_t* grad_evals = nullptr);
PhysState step_euler(const PhysState& s, const ForceFn& force, const MassFn& mass, double eta,
                     std::size_t* grad_evals = nullptr);
PhysState step_rk4(const PhysState& s, const ForceFn& force, const MassFn& mass, double eta,
                   std::size_t* grad_evals = nullptr);

/// Generic rollout from `start`, recording every state and energy.
Trajectory rollout(const PhysState& start, const ForceFn& force, const MassFn& mass,
                   const PotentialFn& potential, const RolloutConfig& cfg);

/// Rollout of a feature grid on the learned potential: q0 = project_state(x),
/// p0 = 0. `x` is N x D_in; `l` the N x N Laplacian.
Trajectory rollout(const Mat& x, const potential::PotentialModel& model, const SparseSym& l,
                   const RolloutConfig& cfg);

// ---- analytic potentials ----------------------------------------------------

class AnalyticPotential {
public:
    enum class Kind { LinearSlope, Quadratic };

    /// V(q) = <g, q>
    static AnalyticPotential linear_slope(Mat g);
    /// V(q) = k/2 ||q - center||^2
    static AnalyticPotential quadratic(double k, Mat center);

    Kind kind() const noexcept { return kind_; }
    double value(const Mat& q) const;
    Mat force(const Mat& q) const;
    ForceFn force_fn() const;
    PotentialFn potential_fn() const;

private:
    Kind kind_ = Kind::Quadratic;
    Mat slope_;
    double k_ = 0.0;
    Mat center_;
};

/// Constant preconditioner c (c = 1 is the identity).
MassFn constant_mass(double c);

/// det of the central-difference Jacobian (h = 1e-6) of one step viewed as a
/// map on (q, p). Requires 2 * q.size() <= 8. Throws NumericFault when the
/// assembled matrix or its determinant is not finite.
double jacobian_det_probe(Integrator kind, const AnalyticPotential& pot, const PhysState& s, double eta,
                          double mass = 1.0);

struct OmittedTermRatio {
    double ratio = 0.0;
    /// Set when ||grad V|| underflowed and the ratio is reported as +inf.
    bool infinite = false;
    double numerator = 0.0;
    double denominator = 0.0;
};

/// || 1/2 (dM^{-1}/dq) p^2 || / || grad V ||, the momentum-update term that a
/// full variable-mass flow would add. The Jacobian-vector product is taken
/// on the tape. Exactly zero for p = 0 or identity mass.
OmittedTermRatio omitted_term_ratio(const PhysState& s, const potential::PotentialModel& model,
                                    const SparseSym& l, MassMode mode);

struct SlicePoint {
    double a;
    double b;
    double v;
};

/// Two seeded orthonormal directions in q-space (Gram-Schmidt on Gaussian
/// draws).
std::pair<Mat, Mat> slice_directions(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// V(q0 + a u + b v) on a resolution x resolution grid over [-extent, extent]^2,
/// a-major order.
std::vector<SlicePoint> landscape_slice(const Mat& q0, const PotentialFn& potential, double extent,
                                        std::size_t resolution, std::uint64_t seed);
std::vector<SlicePoint> landscape_slice(const Mat& x, const potential::PotentialModel& model,
                                        const SparseSym& l, double extent, std::size_t resolution,
                                        std::uint64_t seed);

/// CSV header "step,H,T_kin,V,q_norm,p_norm" then one row per recorded state.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_slice_csv(std::ostream& os, const std::vector<SlicePoint>& slice);

}  // namespace haad::dyn
