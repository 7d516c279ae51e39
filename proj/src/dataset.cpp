#include "haad/dataset.hpp"

#include <algorithm>
#include <string>

#include "haad/error.hpp"

namespace haad {

std::size_t Dataset::count(std::uint8_t label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

bool Dataset::fully_labeled() const { return count(kLabelUnlabeled) == 0; }

void Dataset::validate() const {
    if (labels.size() != features.size()) {
        throw ContractViolation("dataset: " + std::to_string(features.size()) + " samples but " +
                                std::to_string(labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        const num::Mat& x = features[i];
        if (x.rows() != patches() || x.cols() != d_in) {
            throw DimensionMismatch("dataset: sample " + std::to_string(i) + " is " + x.shape_str() +
                                    ", expected " + std::to_string(patches()) + "x" + std::to_string(d_in));
        }
        if (!x.all_finite()) throw ContractViolation("dataset: sample " + std::to_string(i) + " is not finite");
        const auto y = labels[i];
        if (y != kLabelReal && y != kLabelFake && y != kLabelUnlabeled) {
            throw ContractViolation("dataset: sample " + std::to_string(i) + " has label " + std::to_string(y));
        }
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.h_p = h_p;
    out.w_p = w_p;
    out.d_in = d_in;
    out.features.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        out.features.push_back(features.at(i));
        out.labels.push_back(labels.at(i));
    }
    return out;
}

}  // namespace haad
