#include "haad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "haad/error.hpp"

namespace haad::metrics {

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw MetricError("auc: scores and labels differ in length");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] > 1) throw MetricError("auc: label " + std::to_string(labels[i]) + " is not 0 or 1");
        if (std::isnan(scores[i])) throw MetricError("auc: NaN score");
        pos += labels[i];
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) throw MetricError("auc: both classes are required");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of positive mid-ranks (1-based); ranks are exact halves, so the sum is exact in double.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) rank_sum += mid;
        }
        i = j + 1;
    }
    const double p = static_cast<double>(pos);
    const double u = rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

double accuracy(std::span<const double> probs, std::span<const std::uint8_t> labels, double threshold) {
    if (probs.size() != labels.size()) throw MetricError("accuracy: length mismatch");
    if (probs.empty()) throw MetricError("accuracy: empty input");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if ((probs[i] >= threshold) == (labels[i] == 1)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(probs.size());
}

double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double median_where(std::span<const double> scores, std::span<const std::uint8_t> labels, std::uint8_t label) {
    std::vector<double> sel;
    for (std::size_t i = 0; i < scores.size() && i < labels.size(); ++i) {
        if (labels[i] == label) sel.push_back(scores[i]);
    }
    return median(std::move(sel));
}

}  // namespace haad::metrics
