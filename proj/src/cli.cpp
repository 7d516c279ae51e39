#include "haad/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <regex>

#include "haad/error.hpp"
#include "haad/format.hpp"
#include "haad/io.hpp"
#include "haad/metrics.hpp"
#include "haad/synthbench.hpp"
#include "haad/training.hpp"

namespace haad::cli {
namespace {

using num::Mat;

struct UsageError : Error {
    using Error::Error;
};

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
    static const std::regex re(R"((\d+)[xX](\d+))");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw UsageError("--grid expects HxW, got '" + s + "'");
    const std::size_t h = std::stoul(m[1]), w = std::stoul(m[2]);
    if (h == 0 || w == 0) throw UsageError("--grid dimensions must be positive");
    return {h, w};
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    return os;
}

// Key=value file applied to options the command line left unset.
void apply_config(CLI::App* sub, const std::string& path) {
    if (path.empty()) return;
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_file(path);
    } catch (const CLI::FileError& e) {
        throw IoError(std::string("config: ") + e.what());
    }
    for (const auto& item : items) {
        if (!item.parents.empty() && item.parents.front() != sub->get_name()) continue;
        std::string key = item.name;
        std::replace(key.begin(), key.end(), '_', '-');
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config") {
            throw UsageError("config " + path + ": unknown key '" + item.name + "' for " + sub->get_name());
        }
        if (opt->count() > 0) continue;
        try {
            opt->add_result(item.inputs);
            opt->run_callback();
        } catch (const CLI::ParseError& e) {
            throw UsageError("config " + path + ": " + item.name + ": " + e.what());
        }
    }
}

// ---- option groups -----------------------------------------------------------

struct RolloutFlags {
    std::size_t steps = dyn::kDefaultSteps;
    double eta = dyn::kDefaultEta;
    std::string integrator = "symplectic_euler";
    std::string mass_mode = "learned";

    void add(CLI::App* app) {
        app->add_option("--steps", steps, "rollout steps T")->capture_default_str();
        app->add_option("--eta", eta, "step size")->capture_default_str();
        app->add_option("--integrator", integrator, "symplectic_euler | euler | rk4")->capture_default_str();
        app->add_option("--mass-mode", mass_mode, "learned | identity")->capture_default_str();
    }
    dyn::RolloutConfig get() const {
        dyn::RolloutConfig rc;
        rc.steps = steps;
        rc.eta = eta;
        rc.integrator = dyn::parse_integrator(integrator);
        rc.mass_mode = dyn::parse_mass_mode(mass_mode);
        rc.validate();
        return rc;
    }
};

struct GenFlags {
    std::string grid = "8x8";
    std::size_t din = 32;
    std::size_t n = 600;
    std::size_t n_val = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string val_out;
    synth::SynthConfig synth;
};

struct TrainFlags {
    std::string data, val, out, history;
    std::size_t epochs = 10;
    double lr = 2e-4;
    std::size_t batch = 32;
    double lambda = 1.0;
    double gamma = 1.0;
    double lambda_geo = 1.0;
    double lambda_photo = 1.0;
    std::size_t d_phy = potential::kDefaultPhysDim;
    std::size_t mass_hidden = potential::kDefaultMassHidden;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    RolloutFlags rollout;
};

struct EvalFlags {
    std::string ckpt, data, scores, hist, traj_dir;
    std::size_t threads = 1;
};

struct RolloutCmdFlags {
    std::string ckpt, data, out;
    std::size_t index = 0;
};

struct DiagnoseFlags {
    std::string ckpt, data, slice_out;
    bool analytic = false;
    std::size_t probes = 100;
    double slice_extent = 1.0;
    std::size_t slice_res = 21;
    std::uint64_t seed = 0;
    std::size_t max_samples = 200;
};

struct GradcheckFlags {
    std::size_t seeds = 20;
    double h = 1e-5;
    double tol = 1e-6;
    std::string corrupt_group;
};

// ---- commands -----------------------------------------------------------------

int cmd_gen(GenFlags& f, std::ostream& out) {
    if (f.n == 0) throw UsageError("--n must be at least 1");
    if (f.out.empty()) throw UsageError("--out is required");
    if (f.n_val > 0 && f.val_out.empty()) throw UsageError("--n-val needs --val-out");
    auto& sc = f.synth;
    std::tie(sc.h_p, sc.w_p) = parse_grid(f.grid);
    sc.d_in = f.din;
    sc.seed = f.seed;
    sc.n_train = f.n;
    sc.n_val = f.n_val;
    try {
        sc.validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const Dataset tr = synth::make_dataset(sc, f.n, 0);
    io::write_features_file(f.out, tr);
    out << "wrote " << f.out << " (" << sc.h_p << ", " << sc.w_p << ", " << sc.d_in << ", " << f.n << ")\n";
    if (f.n_val > 0) {
        const Dataset val = synth::make_dataset(sc, f.n_val, f.n);
        io::write_features_file(f.val_out, val);
        out << "wrote " << f.val_out << " (" << sc.h_p << ", " << sc.w_p << ", " << sc.d_in << ", " << f.n_val << ")\n";
    }
    return kOk;
}

int cmd_train(TrainFlags& f, std::ostream& out) {
    if (f.data.empty() || f.out.empty()) throw UsageError("train needs --data and --out");
    const Dataset data = io::read_features_file(f.data);
    Dataset val;
    if (!f.val.empty()) val = io::read_features_file(f.val);
    if (!f.val.empty() && (val.h_p != data.h_p || val.w_p != data.w_p || val.d_in != data.d_in)) {
        throw UsageError("validation file shape differs from the training file");
    }
    train::TrainConfig tc;
    tc.epochs = f.epochs;
    tc.batch_size = f.batch;
    tc.seed = f.seed;
    tc.shape = {data.d_in, f.d_phy, f.mass_hidden};
    tc.potential = {f.lambda_geo, f.lambda_photo};
    tc.rollout = f.rollout.get();
    tc.loss = {f.lambda, f.gamma};
    tc.adam.lr = f.lr;
    tc.threads = f.threads;
    const num::SparseSym l = synth::grid_laplacian(data.h_p, data.w_p);
    const train::TrainResult res = train::train(data, f.val.empty() ? nullptr : &val, l, tc);

    io::Checkpoint ck{res.model, tc.rollout, tc.loss, tc.seed, data.h_p, data.w_p};
    io::save_checkpoint(f.out, ck);
    if (!f.history.empty()) {
        auto os = open_out(f.history);
        train::write_history_csv(os, res.history);
    }
    out << "trained " << res.history.size() << " epochs on " << data.size() << " samples\n";
    if (!res.history.empty()) {
        const auto& h = res.history.back();
        out << "final total " << fmt_double(h.loss.total) << " cls " << fmt_double(h.loss.cls) << " phy "
            << fmt_double(h.loss.phy) << " auc " << fmt_double(h.auc) << '\n';
    }
    out << "checkpoint " << f.out << '\n';
    return kOk;
}

void require_compatible(const io::Checkpoint& ck, const Dataset& d) {
    const bool grid_ok = (ck.h_p == 0 && ck.w_p == 0) || (ck.h_p == d.h_p && ck.w_p == d.w_p);
    if (!grid_ok || ck.model.shape.d_in != d.d_in) {
        throw UsageError("shape mismatch: checkpoint expects grid " + std::to_string(ck.h_p) + "x" +
                         std::to_string(ck.w_p) + ", d_in " + std::to_string(ck.model.shape.d_in) +
                         "; feature file has grid " + std::to_string(d.h_p) + "x" + std::to_string(d.w_p) +
                         ", d_in " + std::to_string(d.d_in));
    }
}

int cmd_eval(EvalFlags& f, std::ostream& out) {
    const io::Checkpoint ck = io::load_checkpoint(f.ckpt);
    const Dataset data = io::read_features_file(f.data);
    require_compatible(ck, data);
    const num::SparseSym l = synth::grid_laplacian(data.h_p, data.w_p);
    const auto scores = train::score_dataset(ck.model, data, l, ck.rollout, f.threads);
    if (!f.scores.empty()) {
        auto os = open_out(f.scores);
        os << "index,label,S,D,logit,prob\n";
        for (std::size_t i = 0; i < scores.size(); ++i) {
            os << i << ',' << static_cast<int>(data.labels[i]) << ',' << fmt_double(scores[i].stats.s) << ','
               << fmt_double(scores[i].stats.d) << ',' << fmt_double(scores[i].logit) << ','
               << fmt_double(scores[i].prob) << '\n';
        }
    }
    out << "samples " << data.size() << '\n';
    if (!data.fully_labeled() || !data.has_both_classes()) {
        out << "metrics suppressed: file is unlabeled or single-class\n";
        return kOk;
    }
    std::vector<double> logit, prob, s, d;
    for (const auto& x : scores) {
        logit.push_back(x.logit);
        prob.push_back(x.prob);
        s.push_back(x.stats.s);
        d.push_back(x.stats.d);
    }
    out << "auc " << fmt_double(metrics::auc(logit, data.labels)) << '\n';
    out << "acc " << fmt_double(metrics::accuracy(prob, data.labels)) << '\n';
    out << "auc_S_only " << fmt_double(metrics::auc(s, data.labels)) << '\n';
    out << "median_S_real " << fmt_double(metrics::median_where(s, data.labels, kLabelReal)) << '\n';
    out << "median_S_fake " << fmt_double(metrics::median_where(s, data.labels, kLabelFake)) << '\n';
    out << "median_D_real " << fmt_double(metrics::median_where(d, data.labels, kLabelReal)) << '\n';
    out << "median_D_fake " << fmt_double(metrics::median_where(d, data.labels, kLabelFake)) << '\n';
    if (!f.hist.empty()) {
        auto os = open_out(f.hist);
        synth::write_s_histogram_csv(os, scores, data.labels);
    }
    if (!f.traj_dir.empty()) {
        std::filesystem::create_directories(f.traj_dir);
        auto real = open_out((std::filesystem::path(f.traj_dir) / "trajectories_real.csv").string());
        synth::write_class_trajectories_csv(real, ck.model, data, l, ck.rollout, kLabelReal);
        auto fake = open_out((std::filesystem::path(f.traj_dir) / "trajectories_fake.csv").string());
        synth::write_class_trajectories_csv(fake, ck.model, data, l, ck.rollout, kLabelFake);
    }
    return kOk;
}

int cmd_rollout(RolloutCmdFlags& f, std::ostream& out) {
    const io::Checkpoint ck = io::load_checkpoint(f.ckpt);
    const Dataset data = io::read_features_file(f.data);
    require_compatible(ck, data);
    if (f.index >= data.size()) {
        throw UsageError("--index " + std::to_string(f.index) + " out of range (file has " +
                         std::to_string(data.size()) + " samples)");
    }
    const num::SparseSym l = synth::grid_laplacian(data.h_p, data.w_p);
    const dyn::Trajectory t = dyn::rollout(data.features[f.index], ck.model, l, ck.rollout);
    if (f.out.empty()) {
        dyn::write_trajectory_csv(out, t);
    } else {
        auto os = open_out(f.out);
        dyn::write_trajectory_csv(os, t);
    }
    return kOk;
}

void report_det_probes(const DiagnoseFlags& f, std::ostream& out) {
    std::mt19937_64 rng(f.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> dim_pick(1, 4);
    std::uniform_real_distribution<double> eta_pick(0.01, 0.5);
    std::uniform_real_distribution<double> k_pick(0.1, 2.0);
    std::uniform_real_distribution<double> mass_pick(0.25, 2.0);
    for (auto kind : {dyn::Integrator::SymplecticEuler, dyn::Integrator::Euler, dyn::Integrator::Rk4}) {
        double worst = 0.0;
        std::size_t failures = 0;
        for (std::size_t i = 0; i < f.probes; ++i) {
            const std::size_t n = static_cast<std::size_t>(dim_pick(rng));
            Mat q(1, n), p(1, n), c(1, n);
            for (double& v : q.span()) v = u(rng);
            for (double& v : p.span()) v = u(rng);
            for (double& v : c.span()) v = u(rng);
            const auto pot = dyn::AnalyticPotential::quadratic(k_pick(rng), c);
            try {
                const double det = dyn::jacobian_det_probe(kind, pot, {q, p}, eta_pick(rng), mass_pick(rng));
                worst = std::max(worst, std::abs(det - 1.0));
            } catch (const Error&) {
                ++failures;
            }
        }
        out << "det_probe " << dyn::to_string(kind) << " probes " << f.probes << " max|det-1| " << fmt_double(worst);
        if (kind == dyn::Integrator::SymplecticEuler) out << (worst < 1e-8 ? " PASS" : " FAIL") << " (< 1e-8)";
        if (failures > 0) out << " probe_failures " << failures;
        out << '\n';
    }
    const double eta = 0.4;
    const auto pot = dyn::AnalyticPotential::quadratic(1.0, Mat(1, 1));
    const double det = dyn::jacobian_det_probe(dyn::Integrator::Euler, pot, {Mat{{0.3}}, Mat{{-0.2}}}, eta);
    out << "det_probe euler_1d_quadratic eta " << fmt_double(eta) << " det " << fmt_double(det) << " expected "
        << fmt_double(1.0 + eta * eta) << '\n';
}

void report_solvers_analytic(std::ostream& out, std::size_t steps) {
    out << "integrator,grad_evals_T" << steps << ",max_drift_1000x0.1\n";
    const auto pot = dyn::AnalyticPotential::quadratic(1.0, Mat(1, 1));
    for (auto kind : {dyn::Integrator::Euler, dyn::Integrator::SymplecticEuler, dyn::Integrator::Rk4}) {
        dyn::RolloutConfig rc;
        rc.steps = steps;
        rc.integrator = kind;
        rc.mass_mode = dyn::MassMode::Identity;
        const auto t = dyn::rollout({Mat{{1.0}}, Mat(1, 1)}, pot.force_fn(), {}, pot.potential_fn(), rc);
        out << dyn::to_string(kind) << ',' << t.grad_evals << ','
            << fmt_double(synth::harmonic_max_drift(kind, 1000, 0.1)) << '\n';
    }
}

int cmd_diagnose(DiagnoseFlags& f, std::ostream& out) {
    if (!f.analytic && f.ckpt.empty()) throw UsageError("diagnose needs --ckpt or --analytic");
    out << "# Jacobian determinant probes (constant mass, quadratic potentials)\n";
    report_det_probes(f, out);

    if (f.analytic || f.data.empty()) {
        out << "# solver comparison (analytic harmonic)\n";
        report_solvers_analytic(out, dyn::kDefaultSteps);
        if (!f.slice_out.empty()) {
            const auto pot = dyn::AnalyticPotential::quadratic(1.0, Mat(4, 4));
            auto os = open_out(f.slice_out);
            dyn::write_slice_csv(os, dyn::landscape_slice(Mat(4, 4), pot.potential_fn(), f.slice_extent, f.slice_res,
                                                          f.seed));
            out << "slice " << f.slice_out << '\n';
        }
        return kOk;
    }

    const io::Checkpoint ck = io::load_checkpoint(f.ckpt);
    Dataset data = io::read_features_file(f.data);
    require_compatible(ck, data);
    if (data.size() > f.max_samples) {
        std::vector<std::size_t> idx(f.max_samples);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        data = data.subset(idx);
    }
    const num::SparseSym l = synth::grid_laplacian(data.h_p, data.w_p);

    out << "# solver comparison (" << data.size() << " samples, T = " << ck.rollout.steps << ")\n";
    synth::write_solver_csv(out, synth::solver_comparison(ck.model, data, l, ck.rollout));

    out << "# omitted variable-mass term ratio per step (median, max over samples)\n";
    out << "step,median,max,infinite\n";
    std::vector<std::vector<double>> ratios(ck.rollout.steps + 1);
    std::vector<std::size_t> infinite(ck.rollout.steps + 1);
    for (const auto& x : data.features) {
        const dyn::Trajectory t = dyn::rollout(x, ck.model, l, ck.rollout);
        for (std::size_t s = 0; s < t.states.size(); ++s) {
            const auto r = dyn::omitted_term_ratio(t.states[s], ck.model, l, ck.rollout.mass_mode);
            if (r.infinite) ++infinite[s];
            else ratios[s].push_back(r.ratio);
        }
    }
    for (std::size_t s = 0; s < ratios.size(); ++s) {
        const double mx = ratios[s].empty() ? 0.0 : *std::max_element(ratios[s].begin(), ratios[s].end());
        out << s << ',' << fmt_double(metrics::median(ratios[s])) << ',' << fmt_double(mx) << ',' << infinite[s]
            << '\n';
    }
    if (!f.slice_out.empty() && data.size() > 0) {
        auto os = open_out(f.slice_out);
        dyn::write_slice_csv(os, dyn::landscape_slice(data.features[0], ck.model, l, f.slice_extent, f.slice_res,
                                                      f.seed));
        out << "slice " << f.slice_out << '\n';
    }
    return kOk;
}

int cmd_gradcheck(GradcheckFlags& f, std::ostream& out) {
    if (f.seeds == 0) throw UsageError("--seeds must be at least 1");
    const auto& groups = potential::parameter_groups();
    if (!f.corrupt_group.empty() && std::find(groups.begin(), groups.end(), f.corrupt_group) == groups.end()) {
        throw UsageError("unknown parameter group '" + f.corrupt_group + "'");
    }
    std::vector<double> worst(groups.size(), 0.0);
    std::vector<std::size_t> coords(groups.size(), 0);
    for (std::uint64_t seed = 0; seed < f.seeds; ++seed) {
        train::GradCheckOptions o;
        o.seed = seed;
        o.h = f.h;
        o.tolerance = f.tol;
        o.corrupt_group = f.corrupt_group;
        const auto rep = train::gradcheck_toy(o);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            worst[g] = std::max(worst[g], rep.groups[g].rel_error);
            coords[g] = rep.groups[g].coords;
        }
    }
    out << "group,coords,max_rel_error,status\n";
    std::vector<std::string> failed;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const bool ok = worst[g] < f.tol;
        if (!ok) failed.push_back(groups[g]);
        out << groups[g] << ',' << coords[g] << ',' << fmt_double(worst[g]) << ',' << (ok ? "PASS" : "FAIL") << '\n';
    }
    if (failed.empty()) {
        out << "gradcheck PASS (" << f.seeds << " seeds, tol " << fmt_double(f.tol) << ")\n";
        return kOk;
    }
    out << "gradcheck FAIL:";
    for (const auto& g : failed) out << ' ' << g;
    out << '\n';
    return kCheckFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"HAAD stability probe: potential-surface rollouts for forgery detection"};
    app.require_subcommand(1);

    GenFlags gen;
    auto* g = app.add_subcommand("gen", "write synthetic feature files");
    std::string gen_config, train_config;
    g->add_option("--config", gen_config, "key=value config file (flags win)");
    g->add_option("--grid", gen.grid, "patch grid HxW")->capture_default_str();
    g->add_option("--din", gen.din, "feature width")->capture_default_str();
    g->add_option("--n", gen.n, "samples in --out")->capture_default_str();
    g->add_option("--n-val", gen.n_val, "samples in --val-out");
    g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
    g->add_option("--out", gen.out, "output feature file");
    g->add_option("--val-out", gen.val_out, "validation feature file");
    g->add_option("--smooth-len", gen.synth.smooth_len, "smoothing radius (patches)")->capture_default_str();
    g->add_option("--smooth-passes", gen.synth.smooth_passes, "smoothing passes")->capture_default_str();
    g->add_option("--artifact-frac", gen.synth.artifact_frac, "fraction of patches spliced")->capture_default_str();
    g->add_option("--artifact-gain", gen.synth.artifact_gain, "splice noise amplitude")->capture_default_str();
    g->add_option("--texture-channels", gen.synth.texture_channels, "unsmoothed nuisance channels");
    g->add_flag("--null-control", gen.synth.null_control, "fakes are independent real draws");

    TrainFlags tr;
    auto* t = app.add_subcommand("train", "train a model on a feature file");
    t->add_option("--config", train_config, "key=value config file (flags win)");
    t->add_option("--data", tr.data, "training feature file");
    t->add_option("--val", tr.val, "validation feature file");
    t->add_option("--out", tr.out, "checkpoint path");
    t->add_option("--history", tr.history, "history CSV path");
    t->add_option("--epochs", tr.epochs)->capture_default_str();
    t->add_option("--lr", tr.lr)->capture_default_str();
    t->add_option("--batch", tr.batch)->capture_default_str();
    t->add_option("--lambda", tr.lambda, "physical loss weight")->capture_default_str();
    t->add_option("--gamma", tr.gamma, "hinge margin")->capture_default_str();
    t->add_option("--lambda-geo", tr.lambda_geo)->capture_default_str();
    t->add_option("--lambda-photo", tr.lambda_photo)->capture_default_str();
    t->add_option("--d-phy", tr.d_phy)->capture_default_str();
    t->add_option("--mass-hidden", tr.mass_hidden)->capture_default_str();
    t->add_option("--seed", tr.seed)->capture_default_str();
    t->add_option("--threads", tr.threads)->capture_default_str();
    tr.rollout.add(t);

    EvalFlags ev;
    auto* e = app.add_subcommand("eval", "score a feature file with a checkpoint");
    e->add_option("--ckpt", ev.ckpt)->required();
    e->add_option("--data", ev.data)->required();
    e->add_option("--scores", ev.scores, "per-sample scores CSV");
    e->add_option("--hist", ev.hist, "S histogram CSV");
    e->add_option("--traj-dir", ev.traj_dir, "directory for per-class trajectory CSVs");
    e->add_option("--threads", ev.threads)->capture_default_str();

    RolloutCmdFlags ro;
    auto* r = app.add_subcommand("rollout", "trajectory CSV of one sample");
    r->add_option("--ckpt", ro.ckpt)->required();
    r->add_option("--data", ro.data)->required();
    r->add_option("--index", ro.index)->capture_default_str();
    r->add_option("--out", ro.out, "CSV path (default: stdout)");

    DiagnoseFlags dg;
    auto* d = app.add_subcommand("diagnose", "determinant probes, solver table, omitted-term ratio, slice");
    d->add_option("--ckpt", dg.ckpt);
    d->add_option("--data", dg.data);
    d->add_flag("--analytic", dg.analytic, "analytic potentials only");
    d->add_option("--probes", dg.probes)->capture_default_str();
    d->add_option("--slice-out", dg.slice_out);
    d->add_option("--slice-extent", dg.slice_extent)->capture_default_str();
    d->add_option("--slice-res", dg.slice_res)->capture_default_str();
    d->add_option("--max-samples", dg.max_samples)->capture_default_str();
    d->add_option("--seed", dg.seed)->capture_default_str();

    GradcheckFlags gc;
    auto* c = app.add_subcommand("gradcheck", "certify tape gradients against finite differences");
    c->add_option("--seeds", gc.seeds)->capture_default_str();
    c->add_option("--step", gc.h, "finite-difference step")->capture_default_str();
    c->add_option("--tol", gc.tol)->capture_default_str();
    c->add_option("--corrupt-group", gc.corrupt_group, "test hook: perturb one group's analytic gradient");

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << '\n';
        for (auto* sub : app.get_subcommands()) err << sub->help();
        return kUsage;
    }

    try {
        if (g->parsed()) apply_config(g, gen_config);
        if (t->parsed()) apply_config(t, train_config);
        if (g->parsed()) return cmd_gen(gen, out);
        if (t->parsed()) return cmd_train(tr, out);
        if (e->parsed()) return cmd_eval(ev, out);
        if (r->parsed()) return cmd_rollout(ro, out);
        if (d->parsed()) return cmd_diagnose(dg, out);
        if (c->parsed()) return cmd_gradcheck(gc, out);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << '\n';
        return kUsage;
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << '\n';
        return kUsage;
    } catch (const IoError& ex) {
        err << "I/O error: " << ex.what() << '\n';
        return kIo;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kCheckFailure;
    }
    return kUsage;
}

}  // namespace haad::cli
