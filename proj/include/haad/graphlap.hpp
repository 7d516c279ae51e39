#pragma once

// Spatial patch graph over an H_p x W_p grid and its Laplacian L = D - W.

#include <cstddef>
#include <vector>

#include "haad/numcore/sparse.hpp"

namespace haad::graph {

struct PatchCoord {
    int y;
    int x;
};

class PatchGrid {
public:
    PatchGrid(std::size_t h_p, std::size_t w_p);

    std::size_t h_p() const noexcept { return h_p_; }
    std::size_t w_p() const noexcept { return w_p_; }
    std::size_t n() const noexcept { return h_p_ * w_p_; }
    /// Row-major: patch index i sits at (i / w_p, i % w_p).
    PatchCoord coord(std::size_t i) const noexcept {
        return {static_cast<int>(i / w_p_), static_cast<int>(i % w_p_)};
    }

private:
    std::size_t h_p_;
    std::size_t w_p_;
};

struct Edge {
    std::size_t i;  // i < j
    std::size_t j;
    double w;
};

struct SpatialGraph {
    std::size_t n = 0;
    /// Unordered pairs, each once, sorted by (i, j).
    std::vector<Edge> edges;
};

inline constexpr std::size_t kDefaultNeighbors = 8;
inline constexpr double kDefaultSigma = 8.0;

/// Union-symmetrised k-nearest-neighbour graph over grid coordinates with
/// Gaussian weights exp(-d^2 / (2 sigma^2)). Equal distances are resolved by
/// ascending patch index; k is clamped to n - 1. Throws ConfigError for
/// k == 0, sigma <= 0 or a single-patch grid.
SpatialGraph build_knn_graph(const PatchGrid& grid, std::size_t k = kDefaultNeighbors,
                             double sigma = kDefaultSigma);

/// L = D - W with D the weighted degree diagonal.
num::SparseSym laplacian(const SpatialGraph& g);

/// Disjoint union of `copies` copies of g (block-diagonal adjacency).
SpatialGraph replicate(const SpatialGraph& g, std::size_t copies);

}  // namespace haad::graph
