#include "haad/dynamics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>

#include "haad/error.hpp"
#include "haad/format.hpp"
#include "haad/numcore/kernels.hpp"
#include "haad/numcore/tape.hpp"

namespace haad::dyn {
namespace {

class MatBackend {
public:
    using Value = Mat;
    using Mass = std::optional<Mat>;

    MatBackend(const ForceFn& force, const MassFn& mass) : force_(force), mass_(mass) {}

    Mat force(const Mat& q) {
        ++evals_;
        Mat f = force_(q);
        if (!f.same_shape(q)) {
            throw DimensionMismatch("force returned " + f.shape_str() + " for q " + q.shape_str());
        }
        if (!f.all_finite()) {
            throw NumericFault("rollout aborted: non-finite force at step " + std::to_string(step_),
                               static_cast<std::ptrdiff_t>(step_));
        }
        return f;
    }

    Mass mass(const Mat& q) {
        if (!mass_) return std::nullopt;
        return mass_(q);
    }

    Mat apply_mass(const Mass& m, const Mat& p) const {
        if (!m) return p;
        if (m->cols() == 1 && p.cols() != 1) return num::mul_row_broadcast(p, *m);
        return num::hadamard(*m, p);
    }

    Mat add_scaled(const Mat& a, const Mat& b, double s) const { return num::add_scaled(a, b, s); }

    void set_step(std::size_t t) noexcept { step_ = t; }
    std::size_t evals() const noexcept { return evals_; }

private:
    ForceFn force_;
    MassFn mass_;
    std::size_t evals_ = 0;
    std::size_t step_ = 1;
};

PhysState single_step(Integrator kind, const PhysState& s, const ForceFn& force, const MassFn& mass,
                      double eta, std::size_t* grad_evals) {
    MatBackend b(force, mass);
    PhysState out = step(b, s, eta, kind);
    if (grad_evals != nullptr) *grad_evals += b.evals();
    return out;
}

}  // namespace

void RolloutConfig::validate() const {
    if (steps < 1) throw ConfigError("rollout: steps must be at least 1");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("rollout: eta must be positive");
}

std::string to_string(Integrator kind) {
    switch (kind) {
        case Integrator::SymplecticEuler: return "symplectic_euler";
        case Integrator::Euler: return "euler";
        case Integrator::Rk4: return "rk4";
    }
    return "?";
}

std::string to_string(MassMode mode) { return mode == MassMode::Learned ? "learned" : "identity"; }

Integrator parse_integrator(const std::string& name) {
    if (name == "symplectic_euler" || name == "symplectic") return Integrator::SymplecticEuler;
    if (name == "euler") return Integrator::Euler;
    if (name == "rk4") return Integrator::Rk4;
    throw ConfigError("unknown integrator '" + name + "'");
}

MassMode parse_mass_mode(const std::string& name) {
    if (name == "learned") return MassMode::Learned;
    if (name == "identity") return MassMode::Identity;
    throw ConfigError("unknown mass mode '" + name + "'");
}

double kinetic_energy(const Mat& p) { return 0.5 * num::frobenius_dot(p, p); }

double hamiltonian(const PhysState& s, double potential_value) { return kinetic_energy(s.p) + potential_value; }

PhysState step_symplectic(const PhysState& s, const ForceFn& force, const MassFn& mass, double eta,
                          std::size_t* grad_evals) {
    return single_step(Integrator::SymplecticEuler, s, force, mass, eta, grad_evals);
}

PhysState step_euler(const PhysState& s, const ForceFn& force, const MassFn& mass, double eta,
                     std::size_t* grad_evals) {
    return single_step(Integrator::Euler, s, force, mass, eta, grad_evals);
}

PhysState step_rk4(const PhysState& s, const ForceFn& force, const MassFn& mass, double eta,
                   std::size_t* grad_evals) {
    return single_step(Integrator::Rk4, s, force, mass, eta, grad_evals);
}

Trajectory rollout(const PhysState& start, const ForceFn& force, const MassFn& mass, const PotentialFn& potential,
                   const RolloutConfig& cfg) {
    cfg.validate();
    num::require_same_shape(start.q, start.p, "rollout state");
    MatBackend b(force, cfg.mass_mode == MassMode::Identity ? MassFn{} : mass);
    Trajectory traj;
    traj.states.reserve(cfg.steps + 1);
    integrate(b, start, cfg.steps, cfg.eta, cfg.integrator, [&](std::size_t, const PhysState& s) {
        const double kin = kinetic_energy(s.p);
        const double pot = potential(s.q);
        traj.kinetic.push_back(kin);
        traj.potential.push_back(pot);
        traj.hamiltonian.push_back(kin + pot);
        traj.states.push_back(s);
    });
    traj.grad_evals = b.evals();
    return traj;
}

Trajectory rollout(const Mat& x, const potential::PotentialModel& model, const SparseSym& l,
                   const RolloutConfig& cfg) {
    model.potential.validate();
    const Mat q0 = potential::project_state(x, model.heads);
    const double v_photo = potential::v_photo(potential::project_photo(x, model.heads));
    const ForceFn force = [&](const Mat& q) { return potential::force(l, q, model.potential); };
    const MassFn mass = [&](const Mat& q) { return potential::mass_inv_column(q, model.mass); };
    const PotentialFn pot = [&](const Mat& q) { return potential::v_total(l, q, v_photo, model.potential); };
    return rollout(PhysState{q0, Mat(q0.rows(), q0.cols())}, force, mass, pot, cfg);
}

// ---- analytic potentials ----------------------------------------------------

AnalyticPotential AnalyticPotential::linear_slope(Mat g) {
    if (!g.all_finite()) throw ConfigError("linear_slope: non-finite slope");
    AnalyticPotential a;
    a.kind_ = Kind::LinearSlope;
    a.slope_ = std::move(g);
    return a;
}

AnalyticPotential AnalyticPotential::quadratic(double k, Mat center) {
    if (!std::isfinite(k) || !center.all_finite()) throw ConfigError("quadratic: non-finite parameters");
    AnalyticPotential a;
    a.kind_ = Kind::Quadratic;
    a.k_ = k;
    a.center_ = std::move(center);
    return a;
}

double AnalyticPotential::value(const Mat& q) const {
    if (kind_ == Kind::LinearSlope) return num::frobenius_dot(slope_, q);
    const Mat d = num::add_scaled(q, center_, -1.0);
    return 0.5 * k_ * num::frobenius_dot(d, d);
}

Mat AnalyticPotential::force(const Mat& q) const {
    if (kind_ == Kind::LinearSlope) {
        num::require_same_shape(slope_, q, "linear_slope force");
        return num::scaled(slope_, -1.0);
    }
    return num::scaled(num::add_scaled(q, center_, -1.0), -k_);
}

ForceFn AnalyticPotential::force_fn() const {
    return [self = *this](const Mat& q) { return self.force(q); };
}

PotentialFn AnalyticPotential::potential_fn() const {
    return [self = *this](const Mat& q) { return self.value(q); };
}

MassFn constant_mass(double c) {
    return [c](const Mat& q) { return Mat(q.rows(), q.cols(), c); };
}

double jacobian_det_probe(Integrator kind, const AnalyticPotential& pot, const PhysState& s, double eta,
                          double mass) {
    num::require_same_shape(s.q, s.p, "jacobian_det_probe");
    const std::size_t n = s.q.size();
    const std::size_t dim = 2 * n;
    if (dim == 0 || dim > 8) {
        throw ContractViolation("jacobian_det_probe: phase dimension " + std::to_string(dim) +
                                " outside 1..8");
    }
    constexpr double h = 1e-6;
    const ForceFn force = pot.force_fn();
    const MassFn mass_fn = constant_mass(mass);
    MatBackend b(force, mass_fn);

    auto pack = [&](const PhysState& st, Eigen::VectorXd& z) {
        for (std::size_t i = 0; i < n; ++i) {
            z[static_cast<Eigen::Index>(i)] = st.q.data()[i];
            z[static_cast<Eigen::Index>(n + i)] = st.p.data()[i];
        }
    };

    Eigen::MatrixXd jac(dim, dim);
    Eigen::VectorXd zp(dim);
    Eigen::VectorXd zm(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        PhysState up = s;
        PhysState down = s;
        double& cu = j < n ? up.q.data()[j] : up.p.data()[j - n];
        double& cd = j < n ? down.q.data()[j] : down.p.data()[j - n];
        cu += h;
        cd -= h;
        // Divide by the perturbation that was actually representable.
        const double width = cu - cd;
        pack(step(b, up, eta, kind), zp);
        pack(step(b, down, eta, kind), zm);
        jac.col(static_cast<Eigen::Index>(j)) = (zp - zm) / width;
    }
    if (!jac.allFinite()) throw NumericFault("jacobian_det_probe: non-finite difference stencil");
    const double det = jac.partialPivLu().determinant();
    if (!std::isfinite(det)) throw NumericFault("jacobian_det_probe: non-finite determinant");
    return det;
}

OmittedTermRatio omitted_term_ratio(const PhysState& s, const potential::PotentialModel& model,
                                    const SparseSym& l, MassMode mode) {
    num::require_same_shape(s.q, s.p, "omitted_term_ratio");
    OmittedTermRatio r;
    r.denominator = num::frobenius_norm(potential::grad_v(l, s.q, model.potential));
    if (mode == MassMode::Identity) return r;

    const auto& k = num::kernels::active();
    Mat weights(s.p.rows(), 1);
    for (std::size_t i = 0; i < s.p.rows(); ++i) {
        weights(i, 0) = 0.5 * k.dot(s.p.row(i).data(), s.p.row(i).data(), s.p.cols());
    }
    num::Tape tape;
    const potential::ModelVars vars = potential::bind(tape, model, false);
    const num::Var q = tape.input(s.q);
    const num::Var minv = potential::mass_inv_column(tape, vars, q);
    tape.backward(tape.dot(minv, tape.constant(weights)));
    const Mat& g = tape.grad(q);
    r.numerator = g.empty() ? 0.0 : num::frobenius_norm(g);

    if (r.numerator == 0.0) return r;
    if (r.denominator < 1e-300) {
        r.ratio = std::numeric_limits<double>::infinity();
        r.infinite = true;
        return r;
    }
    r.ratio = r.numerator / r.denominator;
    return r;
}

std::pair<Mat, Mat> slice_directions(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (rows * cols < 2) throw ContractViolation("slice_directions: need at least 2 dimensions");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Mat u(rows, cols);
    Mat v(rows, cols);
    for (double& x : u.span()) x = gauss(rng);
    for (double& x : v.span()) x = gauss(rng);
    u = num::scaled(u, 1.0 / num::frobenius_norm(u));
    for (int pass = 0; pass < 2; ++pass) v = num::add_scaled(v, u, -num::frobenius_dot(u, v));
    v = num::scaled(v, 1.0 / num::frobenius_norm(v));
    return {std::move(u), std::move(v)};
}

std::vector<SlicePoint> landscape_slice(const Mat& q0, const PotentialFn& potential, double extent,
                                        std::size_t resolution, std::uint64_t seed) {
    if (resolution < 2) throw ContractViolation("landscape_slice: resolution must be at least 2");
    const auto [u, v] = slice_directions(q0.rows(), q0.cols(), seed);
    std::vector<SlicePoint> out;
    out.reserve(resolution * resolution);
    const double span = 2.0 * extent / static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double a = -extent + span * static_cast<double>(i);
        const Mat qa = num::add_scaled(q0, u, a);
        for (std::size_t j = 0; j < resolution; ++j) {
            const double b = -extent + span * static_cast<double>(j);
            out.push_back({a, b, potential(num::add_scaled(qa, v, b))});
        }
    }
    return out;
}

std::vector<SlicePoint> landscape_slice(const Mat& x, const potential::PotentialModel& model,
                                        const SparseSym& l, double extent, std::size_t resolution,
                                        std::uint64_t seed) {
    const Mat q0 = potential::project_state(x, model.heads);
    const double v_photo = potential::v_photo(potential::project_photo(x, model.heads));
    return landscape_slice(
        q0, [&](const Mat& q) { return potential::v_total(l, q, v_photo, model.potential); }, extent,
        resolution, seed);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "step,H,T_kin,V,q_norm,p_norm\n";
    for (std::size_t t = 0; t < traj.hamiltonian.size(); ++t) {
        os << t << ',' << fmt_double(traj.hamiltonian[t]) << ',' << fmt_double(traj.kinetic[t]) << ','
           << fmt_double(traj.potential[t]) << ',' << fmt_double(num::frobenius_norm(traj.states[t].q)) << ','
           << fmt_double(num::frobenius_norm(traj.states[t].p)) << '\n';
    }
}

void write_slice_csv(std::ostream& os, const std::vector<SlicePoint>& slice) {
    os << "a,b,V\n";
    for (const SlicePoint& p : slice) os << fmt_double(p.a) << ',' << fmt_double(p.b) << ',' << fmt_double(p.v) << '\n';
}

}  // namespace haad::dyn
