#pragma once

#include <functional>
#include <span>
#include <vector>

namespace haad::num {

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) for every i.
/// Throws ContractViolation for h <= 0 and NumericFault (with the coordinate
/// index) when an evaluation is not finite.
std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> x, double h);

/// ||a - b||_2 / max(||a||_2, ||b||_2); zero when both vectors vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace haad::num
