#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "haad/numcore/mat.hpp"

namespace haad::num {

/// Symmetric sparse matrix stored as its diagonal plus the strict upper
/// triangle. Rows are expanded to both triangles internally for products.
class SparseSym {
public:
    struct Entry {
        std::size_t i;
        std::size_t j;
        double w;
    };

    SparseSym() = default;

    /// Entries must satisfy i <= j, be finite, and name each (i, j) at most
    /// once. Diagonal entries are (i, i, d_i); missing diagonals are zero.
    static SparseSym from_entries(std::size_t dim, std::span<const Entry> entries);

    static SparseSym identity(std::size_t dim);

    std::size_t dim() const noexcept { return diag_.size(); }
    double diag(std::size_t i) const { return diag_[i]; }

    /// Strict upper-triangle entries (i < j), sorted by (i, j).
    std::span<const Entry> off_diagonal() const noexcept { return upper_; }

    /// Neighbours of row i in the expanded matrix, ascending column order.
    std::span<const std::size_t> row_cols(std::size_t i) const {
        return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }
    std::span<const double> row_vals(std::size_t i) const {
        return {vals_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }

    Mat to_dense() const;

    /// Block-diagonal matrix with `copies` copies of this one.
    SparseSym replicate(std::size_t copies) const;

private:
    std::vector<double> diag_;
    std::vector<Entry> upper_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> cols_;
    std::vector<double> vals_;
};

/// Dense product L * q using the symmetric expansion of L.
Mat spmul(const SparseSym& l, const Mat& q);

}  // namespace haad::num
