#include "haad/numcore/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "haad/error.hpp"
#include "haad/numcore/kernels.hpp"

namespace haad::num {

SparseSym SparseSym::from_entries(std::size_t dim, std::span<const Entry> entries) {
    SparseSym s;
    s.diag_.assign(dim, 0.0);
    std::vector<bool> diag_seen(dim, false);
    for (const Entry& e : entries) {
        if (e.i >= dim || e.j >= dim || e.i > e.j) {
            throw ContractViolation("SparseSym: entry (" + std::to_string(e.i) + ", " +
                                    std::to_string(e.j) + ") outside upper triangle of dim " +
                                    std::to_string(dim));
        }
        if (!std::isfinite(e.w)) throw NumericFault("SparseSym: non-finite entry");
        if (e.i == e.j) {
            if (diag_seen[e.i]) throw ContractViolation("SparseSym: duplicate diagonal entry");
            diag_seen[e.i] = true;
            s.diag_[e.i] = e.w;
        } else {
            s.upper_.push_back(e);
        }
    }
    std::sort(s.upper_.begin(), s.upper_.end(),
              [](const Entry& a, const Entry& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    for (std::size_t k = 1; k < s.upper_.size(); ++k) {
        if (s.upper_[k].i == s.upper_[k - 1].i && s.upper_[k].j == s.upper_[k - 1].j) {
            throw ContractViolation("SparseSym: duplicate entry (" + std::to_string(s.upper_[k].i) +
                                    ", " + std::to_string(s.upper_[k].j) + ")");
        }
    }

    std::vector<std::vector<std::pair<std::size_t, double>>> rows(dim);
    for (const Entry& e : s.upper_) {
        rows[e.i].emplace_back(e.j, e.w);
        rows[e.j].emplace_back(e.i, e.w);
    }
    s.row_ptr_.assign(dim + 1, 0);
    for (std::size_t i = 0; i < dim; ++i) {
        std::sort(rows[i].begin(), rows[i].end());
        s.row_ptr_[i + 1] = s.row_ptr_[i] + rows[i].size();
        for (const auto& [c, v] : rows[i]) {
            s.cols_.push_back(c);
            s.vals_.push_back(v);
        }
    }
    return s;
}

SparseSym SparseSym::identity(std::size_t dim) {
    std::vector<Entry> e;
    e.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) e.push_back({i, i, 1.0});
    return from_entries(dim, e);
}

Mat SparseSym::to_dense() const {
    Mat d(dim(), dim());
    for (std::size_t i = 0; i < dim(); ++i) d(i, i) = diag_[i];
    for (const Entry& e : upper_) {
        d(e.i, e.j) = e.w;
        d(e.j, e.i) = e.w;
    }
    return d;
}

SparseSym SparseSym::replicate(std::size_t copies) const {
    std::vector<Entry> e;
    const std::size_t n = dim();
    for (std::size_t c = 0; c < copies; ++c) {
        const std::size_t off = c * n;
        for (std::size_t i = 0; i < n; ++i) {
            if (diag_[i] != 0.0) e.push_back({off + i, off + i, diag_[i]});
        }
        for (const Entry& u : upper_) e.push_back({off + u.i, off + u.j, u.w});
    }
    return from_entries(n * copies, e);
}

Mat spmul(const SparseSym& l, const Mat& q) {
    if (l.dim() != q.rows()) {
        throw DimensionMismatch("spmul: L is " + std::to_string(l.dim()) + "x" +
                                std::to_string(l.dim()) + ", q is " + q.shape_str());
    }
    const auto& k = kernels::active();
    const std::size_t m = q.cols();
    Mat out(q.rows(), m);
    for (std::size_t i = 0; i < l.dim(); ++i) {
        double* oi = out.data() + i * m;
        k.scale(oi, l.diag(i), q.data() + i * m, m);
        const auto cols = l.row_cols(i);
        const auto vals = l.row_vals(i);
        for (std::size_t n = 0; n < cols.size(); ++n) {
            k.axpy(oi, vals[n], q.data() + cols[n] * m, m);
        }
    }
    return out;
}

}  // namespace haad::num
