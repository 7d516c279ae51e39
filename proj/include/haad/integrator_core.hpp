#pragma once

// Integrator steps written once against a small backend interface, so the
// plain-matrix rollout and the differentiable (tape) rollout execute the same
// arithmetic in the same order.
//
// A backend B provides:
//   using Value = ...;                       // matrix-like handle
//   using Mass  = std::optional<Value>;      // empty means identity
//   Value force(const Value& q);             // -grad V(q); counts one evaluation
//   Mass  mass(const Value& q);
//   Value apply_mass(const Mass& m, const Value& p);
//   Value add_scaled(const Value& a, const Value& b, double s);  // a + s*b
//   void  set_step(std::size_t t);           // step index for error reports

#include <cstddef>
#include <utility>

namespace haad::dyn {

enum class Integrator { SymplecticEuler, Euler, Rk4 };

template <class Value>
struct StateOf {
    Value q;
    Value p;
};

/// Force evaluations one step costs.
constexpr std::size_t force_evals_per_step(Integrator kind) noexcept {
    return kind == Integrator::Rk4 ? 4 : 1;
}

/// Momentum first, then position with the updated momentum.
template <class B>
StateOf<typename B::Value> symplectic_step(B& b, const StateOf<typename B::Value>& s, double eta) {
    const auto f = b.force(s.q);
    auto p1 = b.add_scaled(s.p, f, eta);
    const auto m = b.mass(s.q);
    auto q1 = b.add_scaled(s.q, b.apply_mass(m, p1), eta);
    return {std::move(q1), std::move(p1)};
}

/// Explicit Euler: both updates read the state at t.
template <class B>
StateOf<typename B::Value> euler_step(B& b, const StateOf<typename B::Value>& s, double eta) {
    const auto f = b.force(s.q);
    const auto m = b.mass(s.q);
    auto q1 = b.add_scaled(s.q, b.apply_mass(m, s.p), eta);
    auto p1 = b.add_scaled(s.p, f, eta);
    return {std::move(q1), std::move(p1)};
}

/// Classical RK4 on (q' = M^{-1} p, p' = F(q)) with M^{-1} frozen at the
/// step's initial position.
template <class B>
StateOf<typename B::Value> rk4_step(B& b, const StateOf<typename B::Value>& s, double eta) {
    const double half = 0.5 * eta;
    const auto m = b.mass(s.q);

    const auto k1q = b.apply_mass(m, s.p);
    const auto k1p = b.force(s.q);

    const auto q2 = b.add_scaled(s.q, k1q, half);
    const auto p2 = b.add_scaled(s.p, k1p, half);
    const auto k2q = b.apply_mass(m, p2);
    const auto k2p = b.force(q2);

    const auto q3 = b.add_scaled(s.q, k2q, half);
    const auto p3 = b.add_scaled(s.p, k2p, half);
    const auto k3q = b.apply_mass(m, p3);
    const auto k3p = b.force(q3);

    const auto q4 = b.add_scaled(s.q, k3q, eta);
    const auto p4 = b.add_scaled(s.p, k3p, eta);
    const auto k4q = b.apply_mass(m, p4);
    const auto k4p = b.force(q4);

    auto dq = b.add_scaled(k1q, k2q, 2.0);
    dq = b.add_scaled(dq, k3q, 2.0);
    dq = b.add_scaled(dq, k4q, 1.0);
    auto dp = b.add_scaled(k1p, k2p, 2.0);
    dp = b.add_scaled(dp, k3p, 2.0);
    dp = b.add_scaled(dp, k4p, 1.0);

    const double sixth = eta / 6.0;
    auto q1 = b.add_scaled(s.q, dq, sixth);
    auto p1 = b.add_scaled(s.p, dp, sixth);
    return {std::move(q1), std::move(p1)};
}

template <class B>
StateOf<typename B::Value> step(B& b, const StateOf<typename B::Value>& s, double eta, Integrator kind) {
    switch (kind) {
        case Integrator::SymplecticEuler: return symplectic_step(b, s, eta);
        case Integrator::Euler: return euler_step(b, s, eta);
        case Integrator::Rk4: return rk4_step(b, s, eta);
    }
    return symplectic_step(b, s, eta);
}

/// Runs `steps` steps from s0, calling on_state(t, state) for t = 0..steps.
template <class B, class OnState>
void integrate(B& b, StateOf<typename B::Value> s0, std::size_t steps, double eta, Integrator kind,
               OnState&& on_state) {
    on_state(std::size_t{0}, s0);
    for (std::size_t t = 1; t <= steps; ++t) {
        b.set_step(t);
        s0 = step(b, s0, eta, kind);
        on_state(t, s0);
    }
}

}  // namespace haad::dyn
