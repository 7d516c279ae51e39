#pragma once

// Learnable potential surface over patch features: projection heads, the
// geometric (Dirichlet) and photometric (shading variance) terms, the
// analytic force, and the positive per-patch preconditioner M^{-1}(q).
//
// Every quantity has a plain-matrix form and a tape form. Both go through the
// same dense helpers in the same order, so they agree bit-for-bit; the tape
// form exists so training can differentiate through the rollout.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "haad/numcore/mat.hpp"
#include "haad/numcore/sparse.hpp"
#include "haad/numcore/tape.hpp"

namespace haad::potential {

using num::Mat;
using num::SparseSym;
using num::Tape;
using num::Var;

inline constexpr std::size_t kDefaultPhysDim = 64;
inline constexpr std::size_t kDefaultMassHidden = 64;
inline constexpr double kMassEpsilon = 1e-3;

/// Affine map x -> x * weight + bias, weight (in x out), bias (1 x out).
struct Affine {
    Mat weight;
    Mat bias;

    std::size_t in() const noexcept { return weight.rows(); }
    std::size_t out() const noexcept { return weight.cols(); }
    Mat apply(const Mat& x) const;

    friend bool operator==(const Affine&, const Affine&) = default;
};

struct ProjectionHeads {
    Affine position;  // D_in -> D_phy
    Affine normal;    // D_in -> 3
    Affine albedo;    // D_in -> 1
    Affine light;     // D_in -> 3

    friend bool operator==(const ProjectionHeads&, const ProjectionHeads&) = default;
};

/// Two-layer MLP (Linear + ReLU, Linear -> 1) followed by Softplus + epsilon.
struct MassNet {
    Affine hidden;
    Affine output;
    double epsilon = kMassEpsilon;

    friend bool operator==(const MassNet&, const MassNet&) = default;
};

/// Linear read-out on [S, D].
struct Classifier {
    Mat w = Mat(1, 2);
    Mat b = Mat(1, 1);

    friend bool operator==(const Classifier&, const Classifier&) = default;
};

struct PotentialConfig {
    double lambda_geo = 1.0;
    double lambda_photo = 1.0;

    /// Throws ConfigError on a negative or non-finite weight.
    void validate() const;

    friend bool operator==(const PotentialConfig&, const PotentialConfig&) = default;
};

struct PhotoBasis {
    Mat normals;  // N x 3, unit rows
    Mat albedo;   // N x 1, in (0, 1)
    Mat light;    // 1 x 3
    /// Rows whose raw normal was zero and got replaced by (0, 0, 1).
    std::size_t degenerate_normals = 0;
};

struct ModelShape {
    std::size_t d_in = 0;
    std::size_t d_phy = kDefaultPhysDim;
    std::size_t mass_hidden = kDefaultMassHidden;

    friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct NamedParam {
    std::string name;   // e.g. "heads.position.weight"
    std::string group;  // e.g. "heads.position"
    Mat* value;
};

struct ConstNamedParam {
    std::string name;
    std::string group;
    const Mat* value;
};

/// All trainable parameters plus the fixed potential weights.
struct PotentialModel {
    ModelShape shape;
    ProjectionHeads heads;
    MassNet mass;
    Classifier classifier;
    PotentialConfig potential;

    /// Fixed enumeration order used by the optimiser, checkpoints and the
    /// gradient check.
    std::vector<NamedParam> parameters();
    std::vector<ConstNamedParam> parameters() const;
    std::size_t parameter_count() const;

    friend bool operator==(const PotentialModel&, const PotentialModel&) = default;
};

/// Heads and mass net uniform in +-1/sqrt(fan_in), biases zero, classifier
/// zero. Deterministic in `seed`.
PotentialModel init_model(const ModelShape& shape, std::uint64_t seed);

/// Group names in enumeration order: four heads, mass net, classifier.
const std::vector<std::string>& parameter_groups();

// ---- plain evaluation ------------------------------------------------------

Mat project_state(const Mat& x, const ProjectionHeads& heads);
PhotoBasis project_photo(const Mat& x, const ProjectionHeads& heads);

/// (1/N) tr(q^T L q)
double v_geo(const SparseSym& l, const Mat& q);
/// Population variance over patches of rho_i * ReLU(n_i . l).
double v_photo(const PhotoBasis& b);
double v_total(const SparseSym& l, const Mat& q, const PhotoBasis& b, const PotentialConfig& cfg);
/// Same as v_total with the photometric value already evaluated.
double v_total(const SparseSym& l, const Mat& q, double v_photo_value, const PotentialConfig& cfg);

/// lambda_geo * (2/N) * L q. The photometric term is a function of x alone and
/// contributes no q-gradient.
Mat grad_v(const SparseSym& l, const Mat& q, const PotentialConfig& cfg);
/// -grad_v, evaluated with one scaling pass.
Mat force(const SparseSym& l, const Mat& q, const PotentialConfig& cfg);

/// Per-patch preconditioner, N x 1.
Mat mass_inv_column(const Mat& q, const MassNet& net);
/// Per-patch preconditioner broadcast across the D_phy columns, N x D_phy.
Mat mass_inv(const Mat& q, const MassNet& net);

// ---- tape evaluation -------------------------------------------------------

struct AffineVars {
    Var weight;
    Var bias;
};

struct ModelVars {
    AffineVars position, normal, albedo, light;
    AffineVars hidden, output;
    double mass_epsilon = kMassEpsilon;
    Var clf_w;
    Var clf_b;
    /// Same order as PotentialModel::parameters().
    std::vector<Var> all;
};

/// Places the model parameters on the tape, as differentiable inputs when
/// `trainable`, otherwise as constants.
ModelVars bind(Tape& tape, const PotentialModel& model, bool trainable);

Var apply_affine(Tape& tape, const AffineVars& a, Var x);
Var project_state(Tape& tape, const ModelVars& m, Var x);
/// V_photo on the tape; `degenerate_normals` receives the replaced-row count.
Var v_photo(Tape& tape, const ModelVars& m, Var x, std::size_t* degenerate_normals = nullptr);
Var v_geo(Tape& tape, const SparseSym& l, Var q);
Var v_total(Tape& tape, const SparseSym& l, Var q, Var v_photo_value, const PotentialConfig& cfg);
Var force(Tape& tape, const SparseSym& l, Var q, const PotentialConfig& cfg);
Var mass_inv_column(Tape& tape, const ModelVars& m, Var q);

}  // namespace haad::potential
