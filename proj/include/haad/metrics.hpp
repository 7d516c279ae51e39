#pragma once

// Detection metrics. Label 1 (fake) is the positive class throughout.

#include <cstdint>
#include <span>
#include <vector>

namespace haad::metrics {

/// P(score of a random positive > score of a random negative), ties count 1/2.
/// Exact over all pairs; O(n log n) via mid-ranks. Labels must be 0 or 1 and
/// both classes present, otherwise MetricError.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Fraction with (prob >= threshold) == (label == 1).
double accuracy(std::span<const double> probs, std::span<const std::uint8_t> labels, double threshold = 0.5);

/// Median of the scores whose label equals `label`; NaN when there are none.
double median_where(std::span<const double> scores, std::span<const std::uint8_t> labels, std::uint8_t label);

double median(std::vector<double> values);

}  // namespace haad::metrics
