#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "haad/numcore/mat.hpp"

namespace haad {

inline constexpr std::uint8_t kLabelReal = 0;
inline constexpr std::uint8_t kLabelFake = 1;
inline constexpr std::uint8_t kLabelUnlabeled = 255;

/// A set of feature grids sharing one patch grid and feature width. Each
/// feature matrix is (h_p * w_p) x d_in, patches in row-major order.
struct Dataset {
    std::size_t h_p = 0;
    std::size_t w_p = 0;
    std::size_t d_in = 0;
    std::vector<num::Mat> features;
    std::vector<std::uint8_t> labels;

    std::size_t size() const noexcept { return features.size(); }
    std::size_t patches() const noexcept { return h_p * w_p; }
    std::size_t count(std::uint8_t label) const;
    bool has_both_classes() const { return count(kLabelReal) > 0 && count(kLabelFake) > 0; }
    bool fully_labeled() const;

    /// Shapes agree with the header, labels are 0, 1 or 255, values finite.
    /// Throws ContractViolation otherwise.
    void validate() const;

    Dataset subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace haad
