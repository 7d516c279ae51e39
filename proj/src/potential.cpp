#include "haad/potential.hpp"

#include <cmath>

#include "haad/error.hpp"

namespace haad::potential {
namespace {

Affine init_affine(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Affine a{Mat(in, out), Mat(1, out)};
    for (double& w : a.weight.span()) w = dist(rng);
    return a;
}

void require_features(const Mat& x, std::size_t d_in, const char* op) {
    if (x.cols() != d_in) {
        throw DimensionMismatch(std::string(op) + ": features have " + std::to_string(x.cols()) +
                                " columns, heads expect " + std::to_string(d_in));
    }
}

void require_graph(const SparseSym& l, std::size_t rows, const char* op) {
    if (l.dim() != rows || rows == 0) {
        throw DimensionMismatch(std::string(op) + ": Laplacian dim " + std::to_string(l.dim()) +
                                " vs " + std::to_string(rows) + " patches");
    }
}

}  // namespace

Mat Affine::apply(const Mat& x) const { return num::add_row_bias(num::matmul(x, weight), bias); }

void PotentialConfig::validate() const {
    if (!(lambda_geo >= 0.0) || !(lambda_photo >= 0.0) || !std::isfinite(lambda_geo) ||
        !std::isfinite(lambda_photo)) {
        throw ConfigError("potential weights must be finite and nonnegative (lambda_geo=" +
                          std::to_string(lambda_geo) + ", lambda_photo=" + std::to_string(lambda_photo) +
                          ")");
    }
}

std::vector<NamedParam> PotentialModel::parameters() {
    return {
        {"heads.position.weight", "heads.position", &heads.position.weight},
        {"heads.position.bias", "heads.position", &heads.position.bias},
        {"heads.normal.weight", "heads.normal", &heads.normal.weight},
        {"heads.normal.bias", "heads.normal", &heads.normal.bias},
        {"heads.albedo.weight", "heads.albedo", &heads.albedo.weight},
        {"heads.albedo.bias", "heads.albedo", &heads.albedo.bias},
        {"heads.light.weight", "heads.light", &heads.light.weight},
        {"heads.light.bias", "heads.light", &heads.light.bias},
        {"mass.hidden.weight", "mass", &mass.hidden.weight},
        {"mass.hidden.bias", "mass", &mass.hidden.bias},
        {"mass.output.weight", "mass", &mass.output.weight},
        {"mass.output.bias", "mass", &mass.output.bias},
        {"classifier.w", "classifier", &classifier.w},
        {"classifier.b", "classifier", &classifier.b},
    };
}

std::vector<ConstNamedParam> PotentialModel::parameters() const {
    std::vector<ConstNamedParam> out;
    for (const NamedParam& p : const_cast<PotentialModel*>(this)->parameters()) {
        out.push_back({p.name, p.group, p.value});
    }
    return out;
}

std::size_t PotentialModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.value->size();
    return n;
}

const std::vector<std::string>& parameter_groups() {
    static const std::vector<std::string> groups{"heads.position", "heads.normal", "heads.albedo",
                                                 "heads.light",    "mass",         "classifier"};
    return groups;
}

PotentialModel init_model(const ModelShape& shape, std::uint64_t seed) {
    if (shape.d_in == 0 || shape.d_phy == 0 || shape.mass_hidden == 0) {
        throw ConfigError("init_model: all dimensions must be positive");
    }
    std::mt19937_64 rng(seed);
    PotentialModel m;
    m.shape = shape;
    m.heads.position = init_affine(shape.d_in, shape.d_phy, rng);
    m.heads.normal = init_affine(shape.d_in, 3, rng);
    m.heads.albedo = init_affine(shape.d_in, 1, rng);
    m.heads.light = init_affine(shape.d_in, 3, rng);
    m.mass.hidden = init_affine(shape.d_phy, shape.mass_hidden, rng);
    m.mass.output = init_affine(shape.mass_hidden, 1, rng);
    return m;
}

// ---- plain -----------------------------------------------------------------

Mat project_state(const Mat& x, const ProjectionHeads& heads) {
    require_features(x, heads.position.in(), "project_state");
    return heads.position.apply(x);
}

PhotoBasis project_photo(const Mat& x, const ProjectionHeads& heads) {
    require_features(x, heads.normal.in(), "project_photo");
    PhotoBasis b;
    const Mat raw_n = heads.normal.apply(x);
    Tape tape(false);
    b.normals = tape.value(tape.row_normalize(tape.constant(raw_n), &b.degenerate_normals));
    b.albedo = num::sigmoid(heads.albedo.apply(x));
    b.light = tape.value(tape.mean_rows(tape.constant(heads.light.apply(x))));
    return b;
}

double v_photo(const PhotoBasis& b) {
    Tape tape(false);
    const Var n = tape.constant(b.normals);
    const Var l = tape.constant(b.light);
    const Var rho = tape.constant(b.albedo);
    const Var shading = tape.hadamard(rho, tape.relu(tape.row_dot(n, l)));
    return tape.value(tape.pop_variance(shading)).value();
}

double v_geo(const SparseSym& l, const Mat& q) {
    require_graph(l, q.rows(), "v_geo");
    const double inv_n = 1.0 / static_cast<double>(q.rows());
    return inv_n * num::frobenius_dot(q, num::spmul(l, q));
}

double v_total(const SparseSym& l, const Mat& q, double v_photo_value, const PotentialConfig& cfg) {
    cfg.validate();
    return cfg.lambda_geo * v_geo(l, q) + cfg.lambda_photo * v_photo_value;
}

double v_total(const SparseSym& l, const Mat& q, const PhotoBasis& b, const PotentialConfig& cfg) {
    return v_total(l, q, v_photo(b), cfg);
}

Mat grad_v(const SparseSym& l, const Mat& q, const PotentialConfig& cfg) {
    require_graph(l, q.rows(), "grad_v");
    const double c = cfg.lambda_geo * 2.0 / static_cast<double>(q.rows());
    return num::scaled(num::spmul(l, q), c);
}

Mat force(const SparseSym& l, const Mat& q, const PotentialConfig& cfg) {
    require_graph(l, q.rows(), "force");
    const double c = cfg.lambda_geo * 2.0 / static_cast<double>(q.rows());
    return num::scaled(num::spmul(l, q), -c);
}

Mat mass_inv_column(const Mat& q, const MassNet& net) {
    if (q.cols() != net.hidden.in()) {
        throw DimensionMismatch("mass_inv: q has " + std::to_string(q.cols()) + " columns, net expects " +
                                std::to_string(net.hidden.in()));
    }
    Mat out = num::softplus(net.output.apply(num::relu(net.hidden.apply(q))));
    for (double& v : out.span()) v += net.epsilon;
    return out;
}

Mat mass_inv(const Mat& q, const MassNet& net) {
    const Mat col = mass_inv_column(q, net);
    Mat out(q.rows(), q.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        for (std::size_t j = 0; j < q.cols(); ++j) out(i, j) = col(i, 0);
    }
    return out;
}

// ---- tape ------------------------------------------------------------------

ModelVars bind(Tape& tape, const PotentialModel& model, bool trainable) {
    ModelVars v;
    auto put = [&](const Mat& m) {
        Var var = trainable ? tape.input(m) : tape.constant(m);
        v.all.push_back(var);
        return var;
    };
    auto put_affine = [&](const Affine& a) {
        AffineVars av;
        av.weight = put(a.weight);
        av.bias = put(a.bias);
        return av;
    };
    v.position = put_affine(model.heads.position);
    v.normal = put_affine(model.heads.normal);
    v.albedo = put_affine(model.heads.albedo);
    v.light = put_affine(model.heads.light);
    v.hidden = put_affine(model.mass.hidden);
    v.output = put_affine(model.mass.output);
    v.mass_epsilon = model.mass.epsilon;
    v.clf_w = put(model.classifier.w);
    v.clf_b = put(model.classifier.b);
    return v;
}

Var apply_affine(Tape& tape, const AffineVars& a, Var x) {
    return tape.add_row_bias(tape.matmul(x, a.weight), a.bias);
}

Var project_state(Tape& tape, const ModelVars& m, Var x) {
    require_features(tape.value(x), tape.value(m.position.weight).rows(), "project_state");
    return apply_affine(tape, m.position, x);
}

Var v_photo(Tape& tape, const ModelVars& m, Var x, std::size_t* degenerate_normals) {
    require_features(tape.value(x), tape.value(m.normal.weight).rows(), "v_photo");
    const Var n = tape.row_normalize(apply_affine(tape, m.normal, x), degenerate_normals);
    const Var rho = tape.sigmoid(apply_affine(tape, m.albedo, x));
    const Var l = tape.mean_rows(apply_affine(tape, m.light, x));
    const Var shading = tape.hadamard(rho, tape.relu(tape.row_dot(n, l)));
    return tape.pop_variance(shading);
}

Var v_geo(Tape& tape, const SparseSym& l, Var q) {
    const Mat& qv = tape.value(q);
    require_graph(l, qv.rows(), "v_geo");
    const double inv_n = 1.0 / static_cast<double>(qv.rows());
    return tape.scale(tape.dot(q, tape.spmul(l, q)), inv_n);
}

Var v_total(Tape& tape, const SparseSym& l, Var q, Var v_photo_value, const PotentialConfig& cfg) {
    cfg.validate();
    return tape.add(tape.scale(v_geo(tape, l, q), cfg.lambda_geo), tape.scale(v_photo_value, cfg.lambda_photo));
}

Var force(Tape& tape, const SparseSym& l, Var q, const PotentialConfig& cfg) {
    const Mat& qv = tape.value(q);
    require_graph(l, qv.rows(), "force");
    const double c = cfg.lambda_geo * 2.0 / static_cast<double>(qv.rows());
    return tape.scale(tape.spmul(l, q), -c);
}

Var mass_inv_column(Tape& tape, const ModelVars& m, Var q) {
    const Var hidden = tape.relu(apply_affine(tape, m.hidden, q));
    return tape.add_const(tape.softplus(apply_affine(tape, m.output, hidden)), m.mass_epsilon);
}

}  // namespace haad::potential
