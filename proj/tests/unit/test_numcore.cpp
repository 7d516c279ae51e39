#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "haad/error.hpp"
#include "haad/numcore/finite_diff.hpp"
#include "haad/numcore/kernels.hpp"
#include "haad/numcore/mat.hpp"
#include "haad/numcore/sparse.hpp"
#include "haad/numcore/tape.hpp"

using namespace haad;
using num::Mat;
using num::Tape;
using num::Var;

namespace {

Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Mat m(r, c);
    for (double& v : m.span()) v = u(rng);
    return m;
}

std::vector<double> flatten(const Mat& a, const Mat& b) {
    std::vector<double> v(a.span().begin(), a.span().end());
    v.insert(v.end(), b.span().begin(), b.span().end());
    return v;
}

// Scalar graph of two inputs; non-scalar results are reduced against a fixed weight.
using Graph = std::function<Var(Tape&, Var, Var)>;

double eval_graph(const Graph& g, const Mat& a, const Mat& b, const Mat& w) {
    Tape t(false);
    Var out = g(t, t.input(a), t.input(b));
    const Mat& v = t.value(out);
    if (v.size() == 1) return v.value();
    return num::frobenius_dot(v, w);
}

void check_graph(const char* name, const Graph& g, const Mat& a, const Mat& b, std::mt19937_64& rng,
                 double tol = 1e-7) {
    CAPTURE(name);
    Tape probe(false);
    const Mat shape = probe.value(g(probe, probe.input(a), probe.input(b)));
    const Mat w = random_mat(shape.rows(), shape.cols(), rng);

    Tape t;
    Var va = t.input(a), vb = t.input(b);
    Var out = g(t, va, vb);
    if (t.value(out).size() != 1) out = t.dot(out, t.constant(w));
    t.backward(out);
    Mat ga = t.grad(va).empty() ? Mat(a.rows(), a.cols()) : t.grad(va);
    Mat gb = t.grad(vb).empty() ? Mat(b.rows(), b.cols()) : t.grad(vb);
    const std::vector<double> analytic = flatten(ga, gb);

    const std::size_t na = a.size();
    auto f = [&](std::span<const double> x) {
        Mat aa(a.rows(), a.cols(), std::vector<double>(x.begin(), x.begin() + na));
        Mat bb(b.rows(), b.cols(), std::vector<double>(x.begin() + na, x.end()));
        return eval_graph(g, aa, bb, w);
    };
    const std::vector<double> x0 = flatten(a, b);
    const auto fd = num::finite_diff_grad(f, x0, 1e-6);
    CHECK(num::relative_error(analytic, fd) < tol);
}

num::SparseSym path_laplacian(std::size_t n) {
    std::vector<num::SparseSym::Entry> e;
    for (std::size_t i = 0; i < n; ++i) {
        const double deg = (i == 0 || i + 1 == n) ? 1.0 : 2.0;
        e.push_back({i, i, deg});
        if (i + 1 < n) e.push_back({i, i + 1, -1.0});
    }
    return num::SparseSym::from_entries(n, e);
}

}  // namespace

TEST_CASE("kernels: scalar reference values") {
    const auto& k = num::kernels::scalar_table();
    const double a[] = {1, 2, 3, 4, 5};
    const double b[] = {2, -1, 0.5, 0, 1};
    CHECK(k.dot(a, b, 5) == doctest::Approx(2 - 2 + 1.5 + 0 + 5));
    double y[] = {1, 1, 1, 1, 1};
    k.axpy(y, 2.0, a, 5);
    CHECK(y[4] == 11.0);
    double z[5];
    k.hadamard(z, a, b, 5);
    CHECK(z[0] == 2.0);
    CHECK(z[2] == 1.5);
    k.scale(z, -3.0, a, 5);
    CHECK(z[3] == -12.0);
}

TEST_CASE("kernels: AVX2 agrees with scalar") {
    const auto* avx = num::kernels::avx2_table();
    if (avx == nullptr) {
        MESSAGE("AVX2 variant unavailable; equivalence skipped");
        return;
    }
    const auto& sc = num::kernels::scalar_table();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 63u, 1000u, 1027u}) {
        CAPTURE(n);
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        double abs_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(a[i] * b[i]);
        CHECK(std::abs(sc.dot(a.data(), b.data(), n) - avx->dot(a.data(), b.data(), n)) <= 1e-14 * (abs_sum + 1.0));

        std::vector<double> y1 = b, y2 = b;
        sc.axpy(y1.data(), 0.37, a.data(), n);
        avx->axpy(y2.data(), 0.37, a.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(y1[i]) + 1.0));

        std::vector<double> z1(n), z2(n);
        sc.hadamard(z1.data(), a.data(), b.data(), n);
        avx->hadamard(z2.data(), a.data(), b.data(), n);
        CHECK(z1 == z2);
        sc.scale(z1.data(), -1.5, a.data(), n);
        avx->scale(z2.data(), -1.5, a.data(), n);
        CHECK(z1 == z2);

        // aliasing: z == x
        std::vector<double> w1 = a, w2 = a;
        sc.hadamard(w1.data(), w1.data(), b.data(), n);
        avx->hadamard(w2.data(), w2.data(), b.data(), n);
        CHECK(w1 == w2);
    }
}

TEST_CASE("kernels: selection") {
    CHECK_FALSE(num::kernels::select("sse9"));
    const char* before = num::kernels::active().name;
    {
        num::kernels::ScopedKernels pin(num::kernels::scalar_table());
        CHECK(std::string(num::kernels::active().name) == "scalar");
    }
    CHECK(std::string(num::kernels::active().name) == before);
    CHECK(num::kernels::select("scalar"));
    CHECK(num::kernels::select("auto"));
}

TEST_CASE("mat: products and shapes") {
    const Mat a{{1, 2, 3}, {4, 5, 6}};
    const Mat b{{1, 0}, {0, 1}, {2, -1}};
    const Mat c = num::matmul(a, b);
    CHECK(c == Mat{{7, -1}, {16, -1}});
    CHECK(num::matmul_bt(a, a) == Mat{{14, 32}, {32, 77}});
    CHECK(num::matmul_at(a, a) == Mat{{17, 22, 27}, {22, 29, 36}, {27, 36, 45}});
    CHECK(num::add_row_bias(a, Mat{{1, 1, 1}}) == Mat{{2, 3, 4}, {5, 6, 7}});
    CHECK(num::frobenius_dot(a, a) == 91.0);
    CHECK(num::mul_row_broadcast(a, Mat{{2}, {-1}}) == Mat{{2, 4, 6}, {-4, -5, -6}});
    CHECK_THROWS_AS(num::matmul(a, a), DimensionMismatch);
    CHECK(a.shape_str() == "2x3");
}

TEST_CASE("mat: stable softplus and sigmoid") {
    CHECK(num::softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(num::softplus(800.0) == 800.0);
    CHECK(num::softplus(-800.0) >= 0.0);
    CHECK(std::isfinite(num::softplus(-800.0)));
    CHECK(num::sigmoid(0.0) == 0.5);
    CHECK(num::sigmoid(-800.0) >= 0.0);
    CHECK(num::sigmoid(800.0) == 1.0);
}

TEST_CASE("sparse: matches dense product, rejects bad entries") {
    const auto l = path_laplacian(5);
    std::mt19937_64 rng(3);
    const Mat q = random_mat(5, 3, rng);
    const Mat dense = num::matmul(l.to_dense(), q);
    const Mat sp = num::spmul(l, q);
    for (std::size_t i = 0; i < dense.size(); ++i) CHECK(sp.span()[i] == doctest::Approx(dense.span()[i]));

    const num::SparseSym::Entry dup[] = {{0, 1, 1.0}, {0, 1, 2.0}};
    CHECK_THROWS(num::SparseSym::from_entries(2, dup));
    const num::SparseSym::Entry lower[] = {{1, 0, 1.0}};
    CHECK_THROWS(num::SparseSym::from_entries(2, lower));

    const auto r = l.replicate(2);
    CHECK(r.dim() == 10);
    const Mat rd = r.to_dense();
    CHECK(rd(5, 6) == -1.0);
    CHECK(rd(4, 5) == 0.0);
}

TEST_CASE("finite_diff: quadratic and contracts") {
    auto f = [](std::span<const double> x) { return x[0] * x[0] + 3.0 * x[0] * x[1]; };
    const std::vector<double> x{1.0, 2.0};
    const auto g = num::finite_diff_grad(f, x, 1e-5);
    CHECK(g[0] == doctest::Approx(8.0).epsilon(1e-9));
    CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK_THROWS_AS(num::finite_diff_grad(f, x, 0.0), ContractViolation);
    auto bad = [](std::span<const double> x) { return x[1] > 2.0 ? std::nan("") : 0.0; };
    CHECK_THROWS_AS(num::finite_diff_grad(bad, x, 1e-3), NumericFault);
    CHECK(num::relative_error(std::vector<double>{0, 0}, std::vector<double>{0, 0}) == 0.0);
    CHECK(num::relative_error(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("tape: every op against central differences") {
    std::mt19937_64 rng(11);
    const Mat a = random_mat(4, 3, rng);
    const Mat b = random_mat(4, 3, rng);
    const Mat sq = random_mat(3, 2, rng);
    const Mat col = random_mat(4, 1, rng);
    const Mat rowv = random_mat(1, 3, rng);
    const Mat pos = random_mat(4, 3, rng, 0.5, 2.0);
    static const auto lap = path_laplacian(4);

    check_graph("matmul", [](Tape& t, Var x, Var y) { return t.matmul(x, y); }, a, sq, rng);
    check_graph("add", [](Tape& t, Var x, Var y) { return t.add(x, y); }, a, b, rng);
    check_graph("sub", [](Tape& t, Var x, Var y) { return t.sub(x, y); }, a, b, rng);
    check_graph("add_scaled", [](Tape& t, Var x, Var y) { return t.add_scaled(x, y, -0.7); }, a, b, rng);
    check_graph("add_row_bias", [](Tape& t, Var x, Var y) { return t.add_row_bias(x, y); }, a, rowv, rng);
    check_graph("scale", [](Tape& t, Var x, Var y) { return t.add(t.scale(x, 2.5), y); }, a, b, rng);
    check_graph("add_const", [](Tape& t, Var x, Var y) { return t.hadamard(t.add_const(x, 0.3), y); }, a, b, rng);
    check_graph("hadamard", [](Tape& t, Var x, Var y) { return t.hadamard(x, y); }, a, b, rng);
    check_graph("mul_row_broadcast", [](Tape& t, Var x, Var y) { return t.mul_row_broadcast(x, y); }, a, col, rng);
    check_graph("row_dot", [](Tape& t, Var x, Var y) { return t.row_dot(x, y); }, a, rowv, rng);
    check_graph("relu", [](Tape& t, Var x, Var y) { return t.hadamard(t.relu(x), y); }, a, b, rng);
    check_graph("softplus", [](Tape& t, Var x, Var y) { return t.hadamard(t.softplus(x), y); }, a, b, rng);
    check_graph("sigmoid", [](Tape& t, Var x, Var y) { return t.hadamard(t.sigmoid(x), y); }, a, b, rng);
    check_graph("square", [](Tape& t, Var x, Var y) { return t.hadamard(t.square(x), y); }, a, b, rng);
    check_graph("abs", [](Tape& t, Var x, Var y) { return t.hadamard(t.abs(x), y); }, a, b, rng);
    check_graph("log", [](Tape& t, Var x, Var y) { return t.hadamard(t.log(x), y); }, pos, b, rng);
    check_graph("clamp", [](Tape& t, Var x, Var y) { return t.hadamard(t.clamp(x, -0.5, 0.5), y); }, a, b, rng);
    check_graph("sum", [](Tape& t, Var x, Var y) { return t.sum(t.hadamard(x, y)); }, a, b, rng);
    check_graph("mean", [](Tape& t, Var x, Var y) { return t.mean(t.hadamard(x, y)); }, a, b, rng);
    check_graph("mean_rows", [](Tape& t, Var x, Var y) { return t.mean_rows(t.hadamard(x, y)); }, a, b, rng);
    check_graph("pop_variance", [](Tape& t, Var x, Var y) { return t.pop_variance(t.add(x, y)); }, a, b, rng);
    check_graph("dot", [](Tape& t, Var x, Var y) { return t.dot(x, y); }, a, b, rng);
    check_graph("spmul", [](Tape& t, Var x, Var y) { return t.hadamard(t.spmul(lap, x), y); }, a, b, rng);
    check_graph("row_normalize", [](Tape& t, Var x, Var y) { return t.hadamard(t.row_normalize(x), y); }, a, b, rng);
    check_graph("concat_cols", [](Tape& t, Var x, Var y) { return t.concat_cols(x, y); }, a, col, rng);
}

TEST_CASE("tape: recording and non-recording forward values agree bit for bit") {
    std::mt19937_64 rng(5);
    const Mat a = random_mat(6, 4, rng);
    const Mat w = random_mat(4, 3, rng);
    const auto lap = path_laplacian(6);
    auto build = [&](Tape& t) {
        Var x = t.input(a);
        Var h = t.softplus(t.matmul(x, t.input(w)));
        Var s = t.spmul(lap, h);
        return t.add(t.pop_variance(t.row_normalize(s)), t.mean(t.sigmoid(h)));
    };
    Tape on(true), off(false);
    const double v_on = on.value(build(on)).value();
    const double v_off = off.value(build(off)).value();
    CHECK(v_on == v_off);
}

TEST_CASE("tape: degenerate row_normalize and backward contracts") {
    Tape t;
    std::size_t degenerate = 0;
    Var x = t.input(Mat{{0, 0, 0}, {3, 4, 0}});
    Var n = t.row_normalize(x, &degenerate);
    CHECK(degenerate == 1);
    const Mat& nv = t.value(n);
    CHECK(nv(0, 2) == 1.0);
    CHECK(nv(0, 0) == 0.0);
    CHECK(nv(1, 0) == doctest::Approx(0.6));
    CHECK(nv(1, 1) == doctest::Approx(0.8));
    Var out = t.sum(n);
    t.backward(out);
    CHECK(t.grad(x)(0, 0) == 0.0);
    CHECK(t.grad(x)(0, 2) == 0.0);
    CHECK_THROWS_AS(t.backward(n), ContractViolation);

    Tape u;
    Var y = u.input(Mat{{-1.0}});
    CHECK_THROWS_AS(u.backward(u.log(u.add_const(y, 1.0))), NumericFault);
}
