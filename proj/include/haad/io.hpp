#pragma once

// On-disk formats: binary feature files and JSON checkpoints.
//
// Feature file layout (all integers u32 little-endian):
//   "HAADFT01" | h_p | w_p | d_in | count | count label bytes |
//   count * h_p * w_p * d_in f32 little-endian, sample-major, row-major.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "haad/dataset.hpp"
#include "haad/dynamics.hpp"
#include "haad/potential.hpp"
#include "haad/training.hpp"

namespace haad::io {

inline constexpr char kFeatureMagic[8] = {'H', 'A', 'A', 'D', 'F', 'T', '0', '1'};
inline constexpr int kCheckpointVersion = 1;

/// Values are narrowed to f32; a value outside the f32 range is an error.
void write_features(std::ostream& os, const Dataset& data);
void write_features_file(const std::string& path, const Dataset& data);

/// Throws IoError with distinct messages for a bad magic, a truncated header,
/// labels or payload, trailing bytes, an invalid label and a non-finite value.
Dataset read_features(std::istream& is);
Dataset read_features_file(const std::string& path);

struct Checkpoint {
    potential::PotentialModel model;
    dyn::RolloutConfig rollout;
    train::LossConfig loss;
    std::uint64_t seed = 0;
    /// Patch grid the model was trained on; 0 x 0 when unknown.
    std::size_t h_p = 0;
    std::size_t w_p = 0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string checkpoint_to_json(const Checkpoint& ck);
/// Throws IoError on malformed documents, version or shape mismatches.
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace haad::io
