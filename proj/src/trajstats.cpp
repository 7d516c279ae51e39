#include "haad/trajstats.hpp"

#include <cmath>
#include <ostream>

#include "haad/error.hpp"
#include "haad/format.hpp"
#include "haad/numcore/kernels.hpp"

namespace haad::stats {
namespace {

void require_trajectory(std::span<const double> h, std::size_t n, const char* op) {
    if (h.size() < 2) throw ContractViolation(std::string(op) + ": need at least one step");
    if (n == 0) throw ContractViolation(std::string(op) + ": patch count must be positive");
}

}  // namespace

double action_score(std::span<const double> hamiltonian, std::size_t n) {
    require_trajectory(hamiltonian, n, "action_score");
    const std::size_t steps = hamiltonian.size() - 1;
    double acc = hamiltonian[1];
    for (std::size_t t = 2; t <= steps; ++t) acc = acc + hamiltonian[t];
    return action_scale(steps, n) * acc;
}

double action_score(const dyn::Trajectory& traj, std::size_t n) { return action_score(traj.hamiltonian, n); }

double dissipation(std::span<const double> hamiltonian, std::size_t n, bool* single_step) {
    require_trajectory(hamiltonian, n, "dissipation");
    const std::size_t steps = hamiltonian.size() - 1;
    if (single_step != nullptr) *single_step = steps == 1;
    if (steps == 1) return 0.0;
    double acc = std::abs(hamiltonian[2] - hamiltonian[1]);
    for (std::size_t t = 2; t < steps; ++t) acc = acc + std::abs(hamiltonian[t + 1] - hamiltonian[t]);
    return dissipation_scale(steps, n) * acc;
}

double dissipation(const dyn::Trajectory& traj, std::size_t n, bool* single_step) {
    return dissipation(traj.hamiltonian, n, single_step);
}

TrajStats phys_features(const dyn::Trajectory& traj, std::size_t n) {
    TrajStats st;
    st.s = action_score(traj, n);
    st.d = dissipation(traj, n, &st.single_step);
    return st;
}

num::Mat roughness_map(const num::Mat& x, const num::SparseSym& l) {
    const num::Mat lx = num::spmul(l, x);
    const auto& k = num::kernels::active();
    num::Mat out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out(i, 0) = std::sqrt(k.dot(lx.row(i).data(), lx.row(i).data(), lx.cols()));
    }
    return out;
}

double mean_roughness(const num::Mat& x, const num::SparseSym& l) {
    const num::Mat r = roughness_map(x, l);
    double acc = 0.0;
    for (double v : r.span()) acc += v;
    return acc / static_cast<double>(r.size());
}

void write_roughness_csv(std::ostream& os, const num::Mat& roughness, std::size_t w_p) {
    os << "patch,y,x,roughness\n";
    for (std::size_t i = 0; i < roughness.rows(); ++i) {
        os << i << ',' << i / w_p << ',' << i % w_p << ',' << fmt_double(roughness(i, 0)) << '\n';
    }
}

}  // namespace haad::stats
