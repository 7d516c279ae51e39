#include "haad/graphlap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "haad/error.hpp"

namespace haad::graph {

PatchGrid::PatchGrid(std::size_t h_p, std::size_t w_p) : h_p_(h_p), w_p_(w_p) {
    if (h_p == 0 || w_p == 0) throw ConfigError("PatchGrid: empty grid");
}

SpatialGraph build_knn_graph(const PatchGrid& grid, std::size_t k, double sigma) {
    if (k == 0) throw ConfigError("build_knn_graph: k must be at least 1");
    if (!(sigma > 0.0)) throw ConfigError("build_knn_graph: sigma must be positive");
    const std::size_t n = grid.n();
    if (n < 2) throw ConfigError("build_knn_graph: a single patch has no neighbours");
    k = std::min(k, n - 1);

    auto dist2 = [&](std::size_t a, std::size_t b) {
        const PatchCoord ca = grid.coord(a);
        const PatchCoord cb = grid.coord(b);
        const long dy = ca.y - cb.y;
        const long dx = ca.x - cb.x;
        return dy * dy + dx * dx;
    };

    std::set<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              const long da = dist2(i, a);
                              const long db = dist2(i, b);
                              return da != db ? da < db : a < b;
                          });
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t j = order[r];
            pairs.emplace(std::min(i, j), std::max(i, j));
        }
        order.resize(n);
    }

    SpatialGraph g;
    g.n = n;
    g.edges.reserve(pairs.size());
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    for (const auto& [i, j] : pairs) {
        const double d2 = static_cast<double>(dist2(i, j));
        g.edges.push_back({i, j, std::exp(-d2 * inv_two_sigma2)});
    }
    return g;
}

num::SparseSym laplacian(const SpatialGraph& g) {
    std::vector<double> degree(g.n, 0.0);
    std::vector<num::SparseSym::Entry> entries;
    entries.reserve(g.edges.size() + g.n);
    for (const Edge& e : g.edges) {
        if (e.i >= e.j || e.j >= g.n) throw ContractViolation("laplacian: malformed edge");
        degree[e.i] += e.w;
        degree[e.j] += e.w;
        entries.push_back({e.i, e.j, -e.w});
    }
    for (std::size_t i = 0; i < g.n; ++i) entries.push_back({i, i, degree[i]});
    return num::SparseSym::from_entries(g.n, entries);
}

SpatialGraph replicate(const SpatialGraph& g, std::size_t copies) {
    SpatialGraph out;
    out.n = g.n * copies;
    for (std::size_t c = 0; c < copies; ++c) {
        for (const Edge& e : g.edges) out.edges.push_back({e.i + c * g.n, e.j + c * g.n, e.w});
    }
    return out;
}

}  // namespace haad::graph
