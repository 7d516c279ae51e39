#include "haad/synthbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "haad/error.hpp"
#include "haad/format.hpp"
#include "haad/graphlap.hpp"
#include "haad/metrics.hpp"

namespace haad::synth {
namespace {

enum Stream : std::uint64_t { kRealStream = 1, kFakeBaseStream = 2, kFakeNoiseStream = 3, kNullStream = 4 };

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 stream_rng(const SynthConfig& cfg, std::uint64_t index, Stream s) {
    return std::mt19937_64(splitmix(splitmix(splitmix(cfg.seed) ^ index) ^ s));
}

Mat gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat out(rows, cols);
    for (double& v : out.span()) v = g(rng);
    return out;
}

Mat smooth_draw(const SynthConfig& cfg, std::uint64_t index, Stream s) {
    auto rng = stream_rng(cfg, index, s);
    const Mat raw = gaussian(cfg.patches(), cfg.d_in, rng);
    Mat x = smooth_grid(raw, cfg.h_p, cfg.w_p, static_cast<std::size_t>(std::lround(cfg.smooth_len)), cfg.smooth_passes);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t c = 0; c < cfg.texture_channels; ++c) x(i, c) = raw(i, c);
    }
    standardize_columns(x);
    return x;
}

std::vector<double> logits_of(const std::vector<train::SampleScore>& s) {
    std::vector<double> out;
    for (const auto& x : s) out.push_back(x.logit);
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw IoError("cannot open " + p.string() + " for writing");
    return os;
}

}  // namespace

void SynthConfig::validate() const {
    if (h_p == 0 || w_p == 0) throw ConfigError("synth: grid must be non-empty");
    if (h_p * w_p < 2) throw ConfigError("synth: grid needs at least two patches");
    if (d_in == 0) throw ConfigError("synth: d_in must be positive");
    if (!(smooth_len >= 1.0) || !std::isfinite(smooth_len)) throw ConfigError("synth: smooth_len must be >= 1");
    if (!(artifact_frac > 0.0)) throw ConfigError("synth: artifact_frac must be > 0");
    if (artifact_frac > 1.0) throw ConfigError("synth: artifact region larger than the grid (artifact_frac > 1)");
    if (!(artifact_gain >= 0.0) || !std::isfinite(artifact_gain)) throw ConfigError("synth: artifact_gain must be >= 0");
    if (texture_channels > d_in) throw ConfigError("synth: texture_channels exceeds d_in");
}

Mat smooth_grid(const Mat& x, std::size_t h_p, std::size_t w_p, std::size_t radius, std::size_t passes) {
    if (x.rows() != h_p * w_p) throw DimensionMismatch("smooth_grid: " + x.shape_str() + " for a grid of " +
                                                        std::to_string(h_p * w_p) + " patches");
    const long r = static_cast<long>(radius);
    const long hp = static_cast<long>(h_p), wp = static_cast<long>(w_p);
    Mat cur = x;
    for (std::size_t pass = 0; pass < passes; ++pass) {
        Mat next(cur.rows(), cur.cols());
        for (long i = 0; i < hp; ++i) {
            for (long j = 0; j < wp; ++j) {
                auto out = next.row(static_cast<std::size_t>(i * wp + j));
                std::size_t count = 0;
                for (long a = std::max(0L, i - r); a <= std::min(hp - 1, i + r); ++a) {
                    for (long b = std::max(0L, j - r); b <= std::min(wp - 1, j + r); ++b) {
                        auto in = cur.row(static_cast<std::size_t>(a * wp + b));
                        for (std::size_t c = 0; c < cur.cols(); ++c) out[c] += in[c];
                        ++count;
                    }
                }
                for (double& v : out) v /= static_cast<double>(count);
            }
        }
        cur = std::move(next);
    }
    return cur;
}

void standardize_columns(Mat& x) {
    const double n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double mu = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) mu += x(i, c);
        mu /= n;
        double var = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) var += (x(i, c) - mu) * (x(i, c) - mu);
        const double sd = std::sqrt(var / n);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            x(i, c) -= mu;
            if (sd > 0.0) x(i, c) /= sd;
        }
    }
}

std::pair<std::size_t, std::size_t> artifact_extent(const SynthConfig& cfg) {
    cfg.validate();
    const double target = std::max(1.0, std::round(cfg.artifact_frac * static_cast<double>(cfg.patches())));
    const double aspect = static_cast<double>(cfg.h_p) / static_cast<double>(cfg.w_p);
    std::size_t h = static_cast<std::size_t>(std::lround(std::sqrt(target * aspect)));
    h = std::clamp<std::size_t>(h, 1, cfg.h_p);
    std::size_t w = static_cast<std::size_t>(std::lround(target / static_cast<double>(h)));
    w = std::clamp<std::size_t>(w, 1, cfg.w_p);
    return {h, w};
}

Mat gen_real(const SynthConfig& cfg, std::uint64_t index) {
    cfg.validate();
    return smooth_draw(cfg, index, kRealStream);
}

FakeSample gen_fake_sample(const SynthConfig& cfg, std::uint64_t index) {
    cfg.validate();
    FakeSample out;
    if (cfg.null_control) {
        out.x = smooth_draw(cfg, index, kNullStream);
        return out;
    }
    out.x = smooth_draw(cfg, index, kFakeBaseStream);
    const auto [h, w] = artifact_extent(cfg);
    auto rng = stream_rng(cfg, index, kFakeNoiseStream);
    out.region.height = h;
    out.region.width = w;
    out.region.row = std::uniform_int_distribution<std::size_t>(0, cfg.h_p - h)(rng);
    out.region.col = std::uniform_int_distribution<std::size_t>(0, cfg.w_p - w)(rng);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t r = out.region.row; r < out.region.row + h; ++r) {
        for (std::size_t c = out.region.col; c < out.region.col + w; ++c) {
            for (double& v : out.x.row(r * cfg.w_p + c)) v = cfg.artifact_gain * g(rng);
        }
    }
    return out;
}

Mat gen_fake(const SynthConfig& cfg, std::uint64_t index) { return gen_fake_sample(cfg, index).x; }

Dataset make_dataset(const SynthConfig& cfg, std::size_t n, std::uint64_t first_index) {
    cfg.validate();
    Dataset d;
    d.h_p = cfg.h_p;
    d.w_p = cfg.w_p;
    d.d_in = cfg.d_in;
    d.features.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t idx = first_index + k;
        const bool fake = k % 2 == 1;
        d.features.push_back(fake ? gen_fake(cfg, idx) : gen_real(cfg, idx));
        d.labels.push_back(fake ? kLabelFake : kLabelReal);
    }
    return d;
}

std::pair<Dataset, Dataset> make_split(const SynthConfig& cfg) {
    return {make_dataset(cfg, cfg.n_train, 0), make_dataset(cfg, cfg.n_val, cfg.n_train)};
}

num::SparseSym grid_laplacian(std::size_t h_p, std::size_t w_p) {
    return graph::laplacian(graph::build_knn_graph(graph::PatchGrid(h_p, w_p)));
}

EvalSummary evaluate(const potential::PotentialModel& model, const Dataset& data, const num::SparseSym& l,
                     const dyn::RolloutConfig& rollout, std::size_t threads) {
    EvalSummary e;
    e.scores = train::score_dataset(model, data, l, rollout, threads);
    std::vector<double> s, d, p;
    for (const auto& x : e.scores) {
        s.push_back(x.stats.s);
        d.push_back(x.stats.d);
        p.push_back(x.prob);
    }
    e.auc = metrics::auc(logits_of(e.scores), data.labels);
    e.s_only_auc = metrics::auc(s, data.labels);
    e.acc = metrics::accuracy(p, data.labels);
    e.median_s_real = metrics::median_where(s, data.labels, kLabelReal);
    e.median_s_fake = metrics::median_where(s, data.labels, kLabelFake);
    e.median_d_real = metrics::median_where(d, data.labels, kLabelReal);
    e.median_d_fake = metrics::median_where(d, data.labels, kLabelFake);
    return e;
}

BenchReport run_benchmark(const SynthConfig& cfg, const train::TrainConfig& tcfg, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [tr, val] = make_split(cfg);
    const num::SparseSym l = grid_laplacian(cfg.h_p, cfg.w_p);
    train::TrainResult res = train::train(tr, &val, l, tcfg);
    BenchReport rep;
    rep.val = evaluate(res.model, val, l, tcfg.rollout, tcfg.threads);
    rep.history = std::move(res.history);
    rep.model = std::move(res.model);
    if (!out_dir.empty()) {
        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        auto hist = open_out(dir / "s_histogram.csv");
        write_s_histogram_csv(hist, rep.val.scores, val.labels);
        auto real = open_out(dir / "trajectories_real.csv");
        write_class_trajectories_csv(real, rep.model, val, l, tcfg.rollout, kLabelReal);
        auto fake = open_out(dir / "trajectories_fake.csv");
        write_class_trajectories_csv(fake, rep.model, val, l, tcfg.rollout, kLabelFake);
    }
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

void write_s_histogram_csv(std::ostream& os, const std::vector<train::SampleScore>& scores,
                           const std::vector<std::uint8_t>& labels, std::size_t bins) {
    os << "bin_lo,bin_hi,real,fake\n";
    if (scores.empty() || bins == 0) return;
    double lo = scores.front().stats.s, hi = lo;
    for (const auto& s : scores) {
        lo = std::min(lo, s.stats.s);
        hi = std::max(hi, s.stats.s);
    }
    if (hi == lo) hi = lo + 1.0;
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<std::size_t> real(bins), fake(bins);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto b = static_cast<std::size_t>((scores[i].stats.s - lo) / width);
        b = std::min(b, bins - 1);
        if (labels[i] == kLabelReal) ++real[b];
        if (labels[i] == kLabelFake) ++fake[b];
    }
    for (std::size_t b = 0; b < bins; ++b) {
        os << fmt_double(lo + width * static_cast<double>(b)) << ',' << fmt_double(lo + width * static_cast<double>(b + 1))
           << ',' << real[b] << ',' << fake[b] << '\n';
    }
}

void write_class_trajectories_csv(std::ostream& os, const potential::PotentialModel& model, const Dataset& data,
                                  const num::SparseSym& l, const dyn::RolloutConfig& rollout, std::uint8_t label) {
    os << "sample,step,H,T_kin,V\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.labels[i] != label) continue;
        const dyn::Trajectory t = dyn::rollout(data.features[i], model, l, rollout);
        for (std::size_t s = 0; s < t.hamiltonian.size(); ++s) {
            os << i << ',' << s << ',' << fmt_double(t.hamiltonian[s]) << ',' << fmt_double(t.kinetic[s]) << ','
               << fmt_double(t.potential[s]) << '\n';
        }
    }
}

double harmonic_max_drift(dyn::Integrator kind, std::size_t steps, double eta) {
    const auto pot = dyn::AnalyticPotential::quadratic(1.0, Mat(1, 1));
    dyn::RolloutConfig rc;
    rc.steps = steps;
    rc.eta = eta;
    rc.integrator = kind;
    rc.mass_mode = dyn::MassMode::Identity;
    const auto t = dyn::rollout(dyn::PhysState{Mat{{1.0}}, Mat(1, 1)}, pot.force_fn(), {}, pot.potential_fn(), rc);
    double drift = 0.0;
    for (double h : t.hamiltonian) drift = std::max(drift, std::abs(h - t.hamiltonian.front()));
    return drift;
}

std::vector<SolverRow> solver_comparison(const potential::PotentialModel& model, const Dataset& val,
                                         const num::SparseSym& l, const dyn::RolloutConfig& base,
                                         std::size_t repeats) {
    std::vector<SolverRow> rows;
    for (auto kind : {dyn::Integrator::Euler, dyn::Integrator::SymplecticEuler, dyn::Integrator::Rk4}) {
        dyn::RolloutConfig rc = base;
        rc.integrator = kind;
        SolverRow row;
        row.integrator = kind;
        row.wall_seconds = std::numeric_limits<double>::infinity();
        std::vector<train::SampleScore> scores(val.size());
        for (std::size_t rep = 0; rep < std::max<std::size_t>(1, repeats); ++rep) {
            std::size_t evals = 0;
            const auto t0 = std::chrono::steady_clock::now();
            for (std::size_t i = 0; i < val.size(); ++i) {
                const dyn::Trajectory t = dyn::rollout(val.features[i], model, l, rc);
                evals += t.grad_evals;
                scores[i].stats = stats::phys_features(t, val.features[i].rows());
                scores[i].logit = train::logit(scores[i].stats, model.classifier);
            }
            row.wall_seconds = std::min(row.wall_seconds, seconds_since(t0));
            row.grad_evals = evals;
        }
        if (val.has_both_classes() && val.fully_labeled()) row.auc = metrics::auc(logits_of(scores), val.labels);
        else row.auc = std::numeric_limits<double>::quiet_NaN();
        row.max_drift = harmonic_max_drift(kind, 1000, 0.1);
        rows.push_back(row);
    }
    return rows;
}

void write_solver_csv(std::ostream& os, const std::vector<SolverRow>& rows) {
    os << "integrator,auc,grad_evals,wall_ms,max_drift\n";
    for (const auto& r : rows) {
        os << dyn::to_string(r.integrator) << ',' << fmt_double(r.auc) << ',' << r.grad_evals << ','
           << fmt_double(r.wall_seconds * 1e3) << ',' << fmt_double(r.max_drift) << '\n';
    }
}

SweepParam parse_sweep_param(const std::string& name) {
    if (name == "steps" || name == "T") return SweepParam::Steps;
    if (name == "eta") return SweepParam::Eta;
    if (name == "lambda") return SweepParam::Lambda;
    throw ConfigError("unknown sweep parameter '" + name + "' (steps, eta, lambda)");
}

std::string to_string(SweepParam p) {
    switch (p) {
        case SweepParam::Steps: return "steps";
        case SweepParam::Eta: return "eta";
        case SweepParam::Lambda: return "lambda";
    }
    return "?";
}

std::vector<SweepRow> sweep(SweepParam param, const std::vector<double>& values, const SynthConfig& cfg,
                            const train::TrainConfig& tcfg) {
    if (values.empty()) throw ConfigError("sweep: no values");
    const auto [tr, val] = make_split(cfg);
    const num::SparseSym l = grid_laplacian(cfg.h_p, cfg.w_p);
    std::vector<SweepRow> rows;
    for (double v : values) {
        train::TrainConfig c = tcfg;
        switch (param) {
            case SweepParam::Steps:
                if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("sweep: steps must be a positive integer");
                c.rollout.steps = static_cast<std::size_t>(v);
                break;
            case SweepParam::Eta: c.rollout.eta = v; break;
            case SweepParam::Lambda: c.loss.lambda = v; break;
        }
        const train::TrainResult res = train::train(tr, &val, l, c);
        rows.push_back({v, evaluate(res.model, val, l, c.rollout, c.threads).auc});
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, SweepParam param, const std::vector<SweepRow>& rows) {
    os << to_string(param) << ",auc\n";
    for (const auto& r : rows) os << fmt_double(r.value) << ',' << fmt_double(r.auc) << '\n';
}

}  // namespace haad::synth
