#include "haad/numcore/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "haad/error.hpp"

namespace haad::num {

std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> x, double h) {
    if (!(h > 0.0)) throw ContractViolation("finite_diff_grad: step must be positive");
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double up = f(probe);
        probe[i] = orig - h;
        const double down = f(probe);
        probe[i] = orig;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericFault("finite_diff_grad: non-finite evaluation at coordinate " + std::to_string(i),
                               static_cast<std::ptrdiff_t>(i));
        }
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractViolation("relative_error: length mismatch");
    double diff = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(std::max(na, nb));
    if (denom == 0.0) return 0.0;
    return std::sqrt(diff) / denom;
}

}  // namespace haad::num
