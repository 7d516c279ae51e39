#include "haad/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <thread>

#include "haad/error.hpp"
#include "haad/format.hpp"
#include "haad/graphlap.hpp"
#include "haad/metrics.hpp"
#include "haad/numcore/finite_diff.hpp"
#include "haad/trajstats.hpp"

namespace haad::train {
namespace {

using num::Tape;
using num::Var;

class TapeBackend {
public:
    using Value = Var;
    using Mass = std::optional<Var>;

    TapeBackend(Tape& tape, const potential::ModelVars& vars, const SparseSym& l,
                const potential::PotentialConfig& cfg, bool learned_mass)
        : tape_(tape), vars_(vars), l_(l), cfg_(cfg), learned_(learned_mass) {}

    Var force(const Var& q) { return potential::force(tape_, l_, q, cfg_); }

    Mass mass(const Var& q) {
        if (!learned_) return std::nullopt;
        return potential::mass_inv_column(tape_, vars_, q);
    }

    Var apply_mass(const Mass& m, const Var& p) {
        if (!m) return p;
        if (tape_.value(*m).cols() == 1 && tape_.value(p).cols() != 1) return tape_.mul_row_broadcast(p, *m);
        return tape_.hadamard(*m, p);
    }

    Var add_scaled(const Var& a, const Var& b, double s) { return tape_.add_scaled(a, b, s); }

    void set_step(std::size_t) noexcept {}

private:
    Tape& tape_;
    const potential::ModelVars& vars_;
    const SparseSym& l_;
    const potential::PotentialConfig& cfg_;
    bool learned_;
};

void require_label(std::uint8_t y, std::size_t index) {
    if (y != kLabelReal && y != kLabelFake) {
        throw ContractViolation("sample " + std::to_string(index) + " is unlabeled; training needs labels 0/1");
    }
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                const std::size_t lo = t * chunk;
                const std::size_t hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

Mat stats_row(const TrajStats& f) { return Mat{{f.s, f.d}}; }

}  // namespace

void LossConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("loss: lambda must be finite and >= 0");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("loss: gamma must be finite and > 0");
}

void AdamConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("adam: lr must be finite and >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be positive");
}

OptimState OptimState::init(const PotentialModel& model, const AdamConfig& cfg) {
    cfg.validate();
    OptimState s;
    s.cfg = cfg;
    for (const auto& p : model.parameters()) {
        s.m.emplace_back(p.value->rows(), p.value->cols());
        s.v.emplace_back(p.value->rows(), p.value->cols());
    }
    return s;
}

double logit(const TrajStats& f, const Classifier& c) {
    return num::frobenius_dot(c.w, stats_row(f)) + c.b(0, 0);
}

double classify(const TrajStats& f, const Classifier& c) { return num::sigmoid(logit(f, c)); }

double bce_loss(double yhat, int y) {
    if (y != 0 && y != 1) throw ContractViolation("bce_loss: label must be 0 or 1");
    if (std::isnan(yhat)) throw NumericFault("bce_loss: NaN probability");
    const double c = std::clamp(yhat, kProbClamp, 1.0 - kProbClamp);
    return y == 1 ? -std::log(c) : -std::log(1.0 - c);
}

double bce_from_logit(double z, int y) {
    if (y != 0 && y != 1) throw ContractViolation("bce_from_logit: label must be 0 or 1");
    if (std::isnan(z)) throw NumericFault("bce_from_logit: NaN logit");
    const double log_p = -num::softplus(y == 1 ? -z : z);
    return -std::clamp(log_p, std::log(kProbClamp), std::log1p(-kProbClamp));
}

double l_real(std::span<const TrajStats> real, bool* empty) {
    if (empty != nullptr) *empty = real.empty();
    if (real.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& f : real) acc += f.s + f.d;
    return acc / static_cast<double>(real.size());
}

double l_fake(std::span<const TrajStats> fake, double gamma, bool* empty) {
    if (empty != nullptr) *empty = fake.empty();
    if (fake.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& f : fake) acc += std::max(0.0, gamma - f.s);
    return acc / static_cast<double>(fake.size());
}

LossBreakdown total_loss(std::span<const TrajStats> stats, std::span<const std::uint8_t> labels,
                         const Classifier& c, const LossConfig& cfg) {
    cfg.validate();
    if (stats.size() != labels.size()) throw DimensionMismatch("total_loss: stats and labels differ in length");
    if (stats.empty()) throw ContractViolation("total_loss: empty batch");
    std::vector<TrajStats> real, fake;
    double cls = 0.0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        require_label(labels[i], i);
        cls += bce_from_logit(logit(stats[i], c), labels[i]);
        (labels[i] == kLabelFake ? fake : real).push_back(stats[i]);
    }
    LossBreakdown out;
    out.cls = cls / static_cast<double>(stats.size());
    out.real_term = l_real(real, &out.real_empty);
    out.fake_term = l_fake(fake, cfg.gamma, &out.fake_empty);
    out.phy = out.real_term + out.fake_term;
    out.total = out.cls + cfg.lambda * out.phy;
    return out;
}

SampleScore score_sample(const PotentialModel& model, const Mat& x, const SparseSym& l,
                         const dyn::RolloutConfig& rollout) {
    const dyn::Trajectory traj = dyn::rollout(x, model, l, rollout);
    SampleScore s;
    s.stats = stats::phys_features(traj, x.rows());
    s.logit = logit(s.stats, model.classifier);
    s.prob = num::sigmoid(s.logit);
    return s;
}

std::vector<SampleScore> score_dataset(const PotentialModel& model, const Dataset& data, const SparseSym& l,
                                       const dyn::RolloutConfig& rollout, std::size_t threads) {
    std::vector<SampleScore> out(data.size());
    parallel_for(data.size(), threads,
                 [&](std::size_t i) { out[i] = score_sample(model, data.features[i], l, rollout); });
    return out;
}

LossBreakdown batch_loss(const PotentialModel& model, const Dataset& data, std::span<const std::size_t> batch,
                         const SparseSym& l, const dyn::RolloutConfig& rollout, const LossConfig& loss) {
    std::vector<TrajStats> st;
    std::vector<std::uint8_t> labels;
    for (std::size_t i : batch) {
        st.push_back(score_sample(model, data.features.at(i), l, rollout).stats);
        labels.push_back(data.labels.at(i));
    }
    return total_loss(st, labels, model.classifier, loss);
}

// ---- tape ------------------------------------------------------------------

TapeReadout readout_on_tape(Tape& tape, const potential::ModelVars& vars, const potential::PotentialConfig& pcfg,
                            Var x, const SparseSym& l, const dyn::RolloutConfig& rollout) {
    rollout.validate();
    pcfg.validate();
    const Var vp = potential::v_photo(tape, vars, x);
    const Var q0 = potential::project_state(tape, vars, x);
    const Mat& q0v = tape.value(q0);
    const std::size_t n = q0v.rows();
    const Var p0 = tape.constant(Mat(q0v.rows(), q0v.cols()));

    TapeBackend b(tape, vars, l, pcfg, rollout.mass_mode == dyn::MassMode::Learned);
    std::vector<Var> h;
    h.reserve(rollout.steps + 1);
    dyn::integrate(b, dyn::StateOf<Var>{q0, p0}, rollout.steps, rollout.eta, rollout.integrator,
                   [&](std::size_t, const dyn::StateOf<Var>& s) {
                       const Var kin = tape.scale(tape.dot(s.p, s.p), 0.5);
                       const Var pot = potential::v_total(tape, l, s.q, vp, pcfg);
                       h.push_back(tape.add(kin, pot));
                   });

    const std::size_t steps = rollout.steps;
    TapeReadout r;
    Var acc = h[1];
    for (std::size_t t = 2; t <= steps; ++t) acc = tape.add(acc, h[t]);
    r.s = tape.scale(acc, stats::action_scale(steps, n));
    if (steps == 1) {
        r.single_step = true;
        r.d = tape.constant(Mat::scalar(0.0));
    } else {
        Var dacc = tape.abs(tape.sub(h[2], h[1]));
        for (std::size_t t = 2; t < steps; ++t) dacc = tape.add(dacc, tape.abs(tape.sub(h[t + 1], h[t])));
        r.d = tape.scale(dacc, stats::dissipation_scale(steps, n));
    }
    r.logit = tape.add(tape.dot(vars.clf_w, tape.concat_cols(r.s, r.d)), vars.clf_b);
    return r;
}

SampleGrad sample_gradient(const PotentialModel& model, const Mat& x, std::uint8_t label, const SparseSym& l,
                           const dyn::RolloutConfig& rollout, const SampleWeights& w) {
    require_label(label, 0);
    Tape tape(true);
    const potential::ModelVars vars = potential::bind(tape, model, true);
    const TapeReadout r = readout_on_tape(tape, vars, model.potential, tape.constant(x), l, rollout);

    const Var log_p = tape.scale(tape.softplus(tape.scale(r.logit, label == kLabelFake ? -1.0 : 1.0)), -1.0);
    const Var bce = tape.scale(tape.clamp(log_p, std::log(kProbClamp), std::log1p(-kProbClamp)), -1.0);
    const Var phys = label == kLabelReal ? tape.add(r.s, r.d)
                                         : tape.relu(tape.add_const(tape.scale(r.s, -1.0), w.gamma));
    const Var total = tape.add(tape.scale(bce, w.cls_weight), tape.scale(phys, w.phys_weight));
    tape.backward(total);

    SampleGrad out;
    out.score.stats.s = tape.value(r.s).value();
    out.score.stats.d = tape.value(r.d).value();
    out.score.stats.single_step = r.single_step;
    out.score.logit = tape.value(r.logit).value();
    out.score.prob = num::sigmoid(out.score.logit);
    out.contribution = tape.value(total).value();
    out.grads.reserve(vars.all.size());
    for (Var v : vars.all) {
        const Mat& g = tape.grad(v);
        const Mat& val = tape.value(v);
        out.grads.push_back(g.same_shape(val) ? g : Mat(val.rows(), val.cols()));
    }
    return out;
}

BatchGrad loss_and_grad(const PotentialModel& model, const Dataset& data, std::span<const std::size_t> batch,
                        const SparseSym& l, const dyn::RolloutConfig& rollout, const LossConfig& loss,
                        std::size_t threads) {
    loss.validate();
    if (batch.empty()) throw ContractViolation("loss_and_grad: empty batch");
    std::size_t n_real = 0, n_fake = 0;
    for (std::size_t i : batch) {
        require_label(data.labels.at(i), i);
        (data.labels[i] == kLabelFake ? n_fake : n_real)++;
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    std::vector<SampleGrad> per(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t k) {
        const std::size_t i = batch[k];
        const std::uint8_t y = data.labels[i];
        SampleWeights w;
        w.cls_weight = inv_b;
        w.phys_weight = loss.lambda / static_cast<double>(y == kLabelFake ? n_fake : n_real);
        w.gamma = loss.gamma;
        per[k] = sample_gradient(model, data.features[i], y, l, rollout, w);
    });

    BatchGrad out;
    out.grads = per.front().grads;
    for (std::size_t k = 1; k < per.size(); ++k) {
        for (std::size_t j = 0; j < out.grads.size(); ++j) {
            out.grads[j] = num::add_scaled(out.grads[j], per[k].grads[j], 1.0);
        }
    }
    std::vector<TrajStats> st;
    std::vector<std::uint8_t> labels;
    for (std::size_t k = 0; k < per.size(); ++k) {
        st.push_back(per[k].score.stats);
        labels.push_back(data.labels[batch[k]]);
    }
    out.loss = total_loss(st, labels, model.classifier, loss);
    return out;
}

void adam_update(PotentialModel& model, OptimState& state, const std::vector<Mat>& grads) {
    auto params = model.parameters();
    if (grads.size() != params.size() || state.m.size() != params.size()) {
        throw DimensionMismatch("adam_update: gradient/parameter count mismatch");
    }
    for (std::size_t j = 0; j < params.size(); ++j) {
        if (!grads[j].same_shape(*params[j].value)) {
            throw DimensionMismatch("adam_update: gradient of " + params[j].name + " is " + grads[j].shape_str());
        }
        if (!grads[j].all_finite()) {
            throw NumericFault("non-finite gradient for parameter " + params[j].name, static_cast<std::ptrdiff_t>(j));
        }
    }
    const AdamConfig& c = state.cfg;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t j = 0; j < params.size(); ++j) {
        auto theta = params[j].value->span();
        auto m = state.m[j].span();
        auto v = state.v[j].span();
        auto g = grads[j].span();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double upd = c.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c.epsilon);
            if (upd != 0.0) theta[i] -= upd;
        }
    }
}

LossBreakdown train_step(PotentialModel& model, const Dataset& data, std::span<const std::size_t> batch,
                         OptimState& optim, const SparseSym& l, const dyn::RolloutConfig& rollout,
                         const LossConfig& loss, std::size_t threads) {
    BatchGrad bg = loss_and_grad(model, data, batch, l, rollout, loss, threads);
    adam_update(model, optim, bg.grads);
    return bg.loss;
}

// ---- loop ------------------------------------------------------------------

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("train: batch size must be positive");
    if (shape.d_phy == 0 || shape.mass_hidden == 0) throw ConfigError("train: model dimensions must be positive");
    potential.validate();
    rollout.validate();
    loss.validate();
    adam.validate();
}

PotentialModel initial_model(const TrainConfig& cfg) {
    PotentialModel m = potential::init_model(cfg.shape, cfg.seed);
    m.potential = cfg.potential;
    return m;
}

TrainResult train(const Dataset& data, const Dataset* validation, const SparseSym& l, const TrainConfig& cfg) {
    TrainConfig c = cfg;
    c.shape.d_in = data.d_in;
    return train(data, validation, l, c, initial_model(c));
}

TrainResult train(const Dataset& data, const Dataset* validation, const SparseSym& l, const TrainConfig& cfg,
                  PotentialModel start) {
    cfg.validate();
    data.validate();
    if (!data.fully_labeled()) throw ConfigError("train: training set contains unlabeled samples");
    if (!data.has_both_classes()) throw ConfigError("train: training set must contain both real and fake samples");
    if (start.shape.d_in != data.d_in) {
        throw ConfigError("train: model expects d_in " + std::to_string(start.shape.d_in) + ", data has " +
                          std::to_string(data.d_in));
    }
    if (l.dim() != data.patches()) throw ConfigError("train: Laplacian size does not match the patch grid");

    std::vector<std::size_t> val_idx;
    if (validation != nullptr) {
        validation->validate();
        for (std::size_t i = 0; i < validation->size(); ++i) {
            if (validation->labels[i] != kLabelUnlabeled) val_idx.push_back(i);
        }
    }
    const Dataset val = validation != nullptr ? validation->subset(val_idx) : Dataset{};
    const bool use_val = validation != nullptr && val.has_both_classes();

    TrainResult res;
    res.model = std::move(start);
    OptimState optim = OptimState::init(res.model, cfg.adam);
    std::mt19937_64 rng(cfg.seed ^ 0x5eedba7c4u);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochLog log;
        log.epoch = epoch;
        std::size_t batches = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
            const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
            const std::span<const std::size_t> batch(order.data() + lo, hi - lo);
            const LossBreakdown b = train_step(res.model, data, batch, optim, l, cfg.rollout, cfg.loss, cfg.threads);
            log.loss.total += b.total;
            log.loss.cls += b.cls;
            log.loss.phy += b.phy;
            log.loss.real_term += b.real_term;
            log.loss.fake_term += b.fake_term;
            ++batches;
        }
        const double inv = 1.0 / static_cast<double>(batches);
        log.loss.total *= inv;
        log.loss.cls *= inv;
        log.loss.phy *= inv;
        log.loss.real_term *= inv;
        log.loss.fake_term *= inv;
        if (use_val) {
            const auto scores = score_dataset(res.model, val, l, cfg.rollout, cfg.threads);
            std::vector<double> logits;
            for (const auto& s : scores) logits.push_back(s.logit);
            log.auc = metrics::auc(logits, val.labels);
        }
        res.history.push_back(log);
    }
    return res;
}

void write_history_csv(std::ostream& os, const std::vector<EpochLog>& history) {
    os << "epoch,total,cls,phy,auc\n";
    for (const auto& h : history) {
        os << h.epoch << ',' << fmt_double(h.loss.total) << ',' << fmt_double(h.loss.cls) << ','
           << fmt_double(h.loss.phy) << ',' << fmt_double(h.auc) << '\n';
    }
}

// ---- gradient certification ------------------------------------------------

namespace {

// Smallest distance of any non-smooth site (shading and mass ReLUs, |dH|,
// hinge, probability clamp) from its kink over the toy batch.
double kink_margin(const PotentialModel& model, const Dataset& data, const SparseSym& l,
                   const dyn::RolloutConfig& rollout, const LossConfig& loss) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Mat& x = data.features[i];
        const potential::PhotoBasis b = potential::project_photo(x, model.heads);
        const Mat shade = num::matmul_bt(b.normals, b.light);
        for (double v : shade.span()) margin = std::min(margin, std::abs(v));
        const dyn::Trajectory t = dyn::rollout(x, model, l, rollout);
        for (const auto& st : t.states) {
            const Mat pre = model.mass.hidden.apply(st.q);
            for (double v : pre.span()) margin = std::min(margin, std::abs(v));
        }
        for (std::size_t k = 1; k + 1 < t.hamiltonian.size(); ++k) {
            margin = std::min(margin, std::abs(t.hamiltonian[k + 1] - t.hamiltonian[k]));
        }
        const TrajStats f = stats::phys_features(t, x.rows());
        if (data.labels[i] == kLabelFake) margin = std::min(margin, std::abs(loss.gamma - f.s));
        const double z = logit(f, model.classifier);
        const double log_p = -num::softplus(data.labels[i] == kLabelFake ? -z : z);
        margin = std::min(margin, std::min(log_p - std::log(kProbClamp), std::log1p(-kProbClamp) - log_p));
    }
    return margin;
}

}  // namespace

GradCheckReport gradcheck_toy(const GradCheckOptions& opts) {
    const graph::PatchGrid grid(2, 2);
    const SparseSym l = graph::laplacian(graph::build_knn_graph(grid));

    potential::ModelShape shape;
    shape.d_in = 3;
    shape.d_phy = 4;
    shape.mass_hidden = 5;
    std::mt19937_64 rng(opts.seed * 0x9e3779b97f4a7c15ULL + 1);
    std::normal_distribution<double> gauss(0.0, 1.0);

    PotentialModel model;
    Dataset data;
    LossConfig loss;
    std::size_t redraws = 0;
    for (;; ++redraws) {
        model = potential::init_model(shape, opts.seed + 7919 * redraws);
        for (auto& p : model.parameters()) {
            const bool bias = p.name.ends_with(".bias") || p.name == "classifier.b";
            if (bias || p.group == "classifier") {
                for (double& v : p.value->span()) v = 0.5 * gauss(rng);
            }
        }
        data = Dataset{};
        data.h_p = 2;
        data.w_p = 2;
        data.d_in = shape.d_in;
        for (std::uint8_t y : {kLabelReal, kLabelReal, kLabelFake, kLabelFake}) {
            Mat x(grid.n(), shape.d_in);
            for (double& v : x.span()) v = 1.5 * gauss(rng);
            data.features.push_back(std::move(x));
            data.labels.push_back(y);
        }
        loss.lambda = 1.0;
        double max_fake_s = 0.0;
        for (std::size_t i : {std::size_t{2}, std::size_t{3}}) {
            max_fake_s = std::max(max_fake_s, score_sample(model, data.features[i], l, opts.rollout).stats.s);
        }
        loss.gamma = max_fake_s + 0.5;
        if (kink_margin(model, data, l, opts.rollout, loss) >= opts.kink_margin) break;
        if (redraws >= 1000) throw NumericFault("gradcheck_toy: no smooth toy draw found");
    }
    const std::vector<std::size_t> batch{0, 1, 2, 3};

    const BatchGrad analytic = loss_and_grad(model, data, batch, l, opts.rollout, loss);

    GradCheckReport rep;
    rep.seed = opts.seed;
    rep.redraws = redraws;
    rep.pass = true;
    const auto params = model.parameters();
    for (const std::string& group : potential::parameter_groups()) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < params.size(); ++j) {
            if (params[j].group == group) members.push_back(j);
        }
        std::vector<double> x0, tape_grad;
        for (std::size_t j : members) {
            for (double v : params[j].value->span()) x0.push_back(v);
            for (double g : analytic.grads[j].span()) tape_grad.push_back(g);
        }
        if (group == opts.corrupt_group) {
            for (double& g : tape_grad) g *= 1.0 + opts.corrupt_scale;
        }
        const num::ScalarFn f = [&](std::span<const double> xs) {
            PotentialModel m = model;
            auto mp = m.parameters();
            std::size_t k = 0;
            for (std::size_t j : members) {
                for (double& v : mp[j].value->span()) v = xs[k++];
            }
            return batch_loss(m, data, batch, l, opts.rollout, loss).total;
        };
        const std::vector<double> fd = num::finite_diff_grad(f, x0, opts.h);
        GroupCheck gc;
        gc.group = group;
        gc.coords = x0.size();
        gc.rel_error = num::relative_error(tape_grad, fd);
        gc.pass = gc.rel_error < opts.tolerance;
        rep.pass = rep.pass && gc.pass;
        rep.groups.push_back(gc);
    }
    return rep;
}

}  // namespace haad::train
