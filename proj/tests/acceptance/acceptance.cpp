// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
// Usage: haad_acceptance [report_dir] [--only 1,2,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "haad/dynamics.hpp"
#include "haad/format.hpp"
#include "haad/io.hpp"
#include "haad/metrics.hpp"
#include "haad/synthbench.hpp"
#include "haad/trajstats.hpp"

using namespace haad;
using num::Mat;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string report_dir;

struct Shared {
    std::optional<synth::BenchReport> bench;
    Dataset val;
};
Shared shared;

// ---- 1 ----------------------------------------------------------------------
Outcome volume_preservation() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> dim(1, 4);
    std::uniform_real_distribution<double> u(-1.0, 1.0), eta_d(0.01, 0.5), k_d(0.1, 3.0), m_d(0.2, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = static_cast<std::size_t>(dim(rng));
        Mat q(1, n), p(1, n), g(1, n);
        for (double& v : q.span()) v = u(rng);
        for (double& v : p.span()) v = u(rng);
        for (double& v : g.span()) v = u(rng);
        const auto pot = (i % 2 == 0) ? dyn::AnalyticPotential::quadratic(k_d(rng), g)
                                      : dyn::AnalyticPotential::linear_slope(g);
        const double det = dyn::jacobian_det_probe(dyn::Integrator::SymplecticEuler, pot, {q, p}, eta_d(rng), m_d(rng));
        worst = std::max(worst, std::abs(det - 1.0));
    }
    double euler_worst = 0.0;
    const auto quad = dyn::AnalyticPotential::quadratic(1.0, Mat(1, 1));
    for (double eta : {0.05, 0.1, 0.25, 0.4, 0.5}) {
        const double det = dyn::jacobian_det_probe(dyn::Integrator::Euler, quad, {Mat{{0.3}}, Mat{{-0.7}}}, eta);
        euler_worst = std::max(euler_worst, std::abs(det - (1.0 + eta * eta)));
    }
    return {worst < 1e-8 && euler_worst < 1e-8,
            "symplectic max|det-1| = " + fmt(worst) + " over 100 probes; euler max|det-(1+eta^2)| = " + fmt(euler_worst)};
}

// ---- 2 ----------------------------------------------------------------------
Outcome quadratic_growth() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    Mat slope(4, 3);
    for (double& v : slope.span()) v = g(rng);
    const double c2 = num::frobenius_dot(slope, slope);
    dyn::RolloutConfig rc;
    rc.steps = 10;
    rc.eta = 0.4;
    rc.mass_mode = dyn::MassMode::Identity;
    const auto lin = dyn::AnalyticPotential::linear_slope(slope);
    Mat q0(4, 3);
    for (double& v : q0.span()) v = g(rng);
    const auto t = dyn::rollout({q0, Mat(4, 3)}, lin.force_fn(), {}, lin.potential_fn(), rc);
    double worst = 0.0;
    for (std::size_t k = 0; k <= 10; ++k) {
        const double tk = static_cast<double>(k) * rc.eta;
        worst = std::max(worst, std::abs(t.kinetic[k] - 0.5 * c2 * tk * tk));
    }
    const auto quad = dyn::AnalyticPotential::quadratic(2.5, q0);
    const auto r = dyn::rollout({q0, Mat(4, 3)}, quad.force_fn(), {}, quad.potential_fn(), rc);
    bool still = true;
    for (const auto& s : r.states) still = still && s.q == q0 && s.p == Mat(4, 3);
    return {worst < 1e-12 && still, "max|kinetic - C^2 (t eta)^2 / 2| = " + fmt(worst) +
                                        "; quadratic minimum at rest bit-identical: " + (still ? "yes" : "no")};
}

// ---- 3 ----------------------------------------------------------------------
Outcome gradient_certification() {
    const auto& groups = potential::parameter_groups();
    std::vector<double> worst(groups.size(), 0.0);
    bool pass = true;
    std::size_t redraws = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        train::GradCheckOptions o;
        o.seed = seed;
        const auto rep = train::gradcheck_toy(o);
        pass = pass && rep.pass;
        redraws += rep.redraws;
        for (std::size_t g = 0; g < groups.size(); ++g) worst[g] = std::max(worst[g], rep.groups[g].rel_error);
    }
    std::string d = "max rel err over 20 seeds:";
    for (std::size_t g = 0; g < groups.size(); ++g) {
        pass = pass && worst[g] < 1e-6;
        d += " " + groups[g] + "=" + fmt(worst[g], 2);
    }
    d += "; toy draws redrawn for kink proximity: " + std::to_string(redraws);
    return {pass, d};
}

// ---- 4 ----------------------------------------------------------------------
Outcome drift_ordering() {
    const double eu = synth::harmonic_max_drift(dyn::Integrator::Euler, 1000, 0.1);
    const double se = synth::harmonic_max_drift(dyn::Integrator::SymplecticEuler, 1000, 0.1);
    return {eu > 10.0 * se, "euler drift " + fmt(eu) + ", symplectic drift " + fmt(se) + ", ratio " + fmt(eu / se)};
}

// ---- 5 ----------------------------------------------------------------------
Outcome cost_accounting() {
    synth::SynthConfig sc;
    const auto [tr, val] = synth::make_split(sc);
    const auto l = synth::grid_laplacian(sc.h_p, sc.w_p);
    const auto model = potential::init_model({sc.d_in, potential::kDefaultPhysDim, potential::kDefaultMassHidden}, 0);
    bool counts = true;
    for (std::size_t steps : {1u, 4u, 9u}) {
        for (auto kind : {dyn::Integrator::Euler, dyn::Integrator::SymplecticEuler, dyn::Integrator::Rk4}) {
            dyn::RolloutConfig rc;
            rc.steps = steps;
            rc.integrator = kind;
            const auto t = dyn::rollout(val.features[0], model, l, rc);
            const std::size_t want = kind == dyn::Integrator::Rk4 ? 4 * steps : steps;
            counts = counts && t.grad_evals == want;
        }
    }
    const auto rows = synth::solver_comparison(model, val, l, dyn::RolloutConfig{}, 5);
    double se = 0.0, rk = 0.0;
    std::string d;
    for (const auto& r : rows) {
        if (r.integrator == dyn::Integrator::SymplecticEuler) se = r.wall_seconds;
        if (r.integrator == dyn::Integrator::Rk4) rk = r.wall_seconds;
        d += dyn::to_string(r.integrator) + " evals " + std::to_string(r.grad_evals) + " wall " +
             fmt(r.wall_seconds * 1e3) + " ms; ";
    }
    if (!report_dir.empty()) {
        std::ofstream os(std::filesystem::path(report_dir) / "solver_comparison.csv");
        synth::write_solver_csv(os, rows);
    }
    d += std::string("counts T/T/4T: ") + (counts ? "exact" : "WRONG");
    return {counts && se < rk, d};
}

// ---- 6 ----------------------------------------------------------------------
Outcome synthetic_benchmark() {
    const auto t0 = std::chrono::steady_clock::now();
    synth::SynthConfig sc;
    train::TrainConfig tc;
    tc.shape.d_in = sc.d_in;
    shared.bench = synth::run_benchmark(sc, tc, report_dir);
    shared.val = synth::make_split(sc).second;
    const auto& v = shared.bench->val;

    synth::SynthConfig nc = sc;
    nc.null_control = true;
    nc.n_val = 1000;
    const auto null_rep = synth::run_benchmark(nc, tc);
    const double runtime = seconds_since(t0);

    const bool pass = v.auc >= 0.95 && v.median_s_fake > v.median_s_real && v.s_only_auc >= 0.9 &&
                      std::abs(null_rep.val.auc - 0.5) <= 0.05 && runtime < 300.0;
    return {pass, "val AUC " + fmt(v.auc) + ", S-only AUC " + fmt(v.s_only_auc) + ", median S fake " +
                      fmt(v.median_s_fake) + " vs real " + fmt(v.median_s_real) + ", null-control AUC " +
                      fmt(null_rep.val.auc) + " (n_val 1000), runtime " + fmt(runtime, 3) + " s"};
}

// ---- 7 ----------------------------------------------------------------------
Outcome omitted_term() {
    if (!shared.bench) synthetic_benchmark();
    const auto& model = shared.bench->model;
    const auto l = synth::grid_laplacian(shared.val.h_p, shared.val.w_p);
    const dyn::RolloutConfig rc;
    std::vector<std::vector<double>> ratios(rc.steps + 1);
    bool zero_at_start = true, finite_after = true;
    for (const auto& x : shared.val.features) {
        const auto t = dyn::rollout(x, model, l, rc);
        for (std::size_t s = 0; s < t.states.size(); ++s) {
            const auto r = dyn::omitted_term_ratio(t.states[s], model, l, rc.mass_mode);
            if (s == 0) zero_at_start = zero_at_start && r.ratio == 0.0 && !r.infinite;
            else finite_after = finite_after && !r.infinite && std::isfinite(r.ratio);
            ratios[s].push_back(r.ratio);
        }
    }
    std::string d = std::string("step 0 exactly zero: ") + (zero_at_start ? "yes" : "no") + "; median per step:";
    for (std::size_t s = 0; s < ratios.size(); ++s) d += " " + fmt(metrics::median(ratios[s]), 3);
    return {zero_at_start && finite_after, d};
}

// ---- 8 ----------------------------------------------------------------------
Mat replicate_rows(const Mat& x, std::size_t k) {
    Mat out(x.rows() * k, x.cols());
    for (std::size_t c = 0; c < k; ++c)
        std::copy(x.span().begin(), x.span().end(), out.span().begin() + static_cast<std::ptrdiff_t>(c * x.size()));
    return out;
}

Outcome replication_invariance() {
    synth::SynthConfig sc;
    const auto l = synth::grid_laplacian(sc.h_p, sc.w_p);
    const auto model = potential::init_model({sc.d_in, potential::kDefaultPhysDim, potential::kDefaultMassHidden}, 3);
    const Mat x = synth::gen_fake(sc, 0);
    const dyn::RolloutConfig rc;
    const auto base = dyn::rollout(x, model, l, rc);
    const auto st = stats::phys_features(base, x.rows());
    double worst_s = 0.0, worst_d = 0.0, worst_v = 0.0;
    std::string d;
    for (std::size_t k : {2u, 3u}) {
        const Mat xk = replicate_rows(x, k);
        const auto lk = l.replicate(k);
        const auto tk = dyn::rollout(xk, model, lk, rc);
        const auto sk = stats::phys_features(tk, xk.rows());
        worst_s = std::max(worst_s, std::abs(sk.s - st.s));
        worst_d = std::max(worst_d, std::abs(sk.d - st.d));
        for (std::size_t s = 0; s < base.potential.size(); ++s)
            worst_v = std::max(worst_v, std::abs(tk.potential[s] - base.potential[s]));
        d += "k=" + std::to_string(k) + ": S " + fmt(sk.s, 6) + " vs " + fmt(st.s, 6) + ", D " + fmt(sk.d, 6) + " vs " +
             fmt(st.d, 6) + "; ";
    }
    d += "max|dS| " + fmt(worst_s) + ", max|dD| " + fmt(worst_d) + ", max|dV| " + fmt(worst_v);
    return {worst_s <= 1e-12 && worst_d <= 1e-12 && worst_v <= 1e-12, d};
}

// ---- 9 ----------------------------------------------------------------------
Outcome ablation_directions() {
    const char* names[] = {"both-on", "lambda=0", "T=1", "smooth-only", "photo-only"};
    const std::size_t threads = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));
    std::vector<double> mean(5, 0.0);
    std::ostringstream csv;
    csv << "variant,seed,auc\n";
    for (int v = 0; v < 5; ++v) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            synth::SynthConfig sc;
            sc.texture_channels = 24;
            sc.artifact_frac = 0.125;
            sc.seed = seed;
            train::TrainConfig tc;
            tc.shape.d_in = sc.d_in;
            tc.epochs = 6;
            tc.adam.lr = 2e-3;
            tc.seed = seed;
            tc.threads = threads;
            if (v == 1) tc.loss.lambda = 0.0;
            if (v == 2) tc.rollout.steps = 1;
            if (v == 3) tc.potential.lambda_photo = 0.0;
            if (v == 4) tc.potential.lambda_geo = 0.0;
            const double auc = synth::run_benchmark(sc, tc).val.auc;
            csv << names[v] << ',' << seed << ',' << fmt_double(auc) << '\n';
            mean[v] += auc / 5.0;
        }
    }
    if (!report_dir.empty()) std::ofstream(std::filesystem::path(report_dir) / "ablations.csv") << csv.str();
    std::string d = "mean AUC over 5 seeds:";
    for (int v = 0; v < 5; ++v) d += std::string(" ") + names[v] + " " + fmt(mean[v]);
    const bool lam = mean[1] < mean[0], steps = mean[0] > mean[2], smooth = mean[3] < mean[0], photo = mean[4] < mean[0];
    d += std::string("; lambda ") + (lam ? "ok" : "violated") + ", T " + (steps ? "ok" : "violated") + ", smooth-only " +
         (smooth ? "ok" : "violated") + ", photo-only " + (photo ? "ok" : "violated");
    return {lam && steps && smooth && photo, d};
}

// ---- 10 ---------------------------------------------------------------------
std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "haad_acceptance_determinism";
    std::filesystem::remove_all(root);
    synth::SynthConfig sc;
    sc.n_train = 120;
    sc.n_val = 60;
    sc.seed = 11;
    train::TrainConfig tc;
    tc.shape.d_in = sc.d_in;
    tc.epochs = 2;
    tc.seed = 11;
    std::vector<std::string> ckpts;
    std::vector<std::string> files;
    for (int run = 0; run < 2; ++run) {
        tc.threads = run == 0 ? 1 : 3;
        const auto dir = root / ("run" + std::to_string(run));
        const auto rep = synth::run_benchmark(sc, tc, dir.string());
        io::Checkpoint ck{rep.model, tc.rollout, tc.loss, tc.seed, sc.h_p, sc.w_p};
        io::save_checkpoint((dir / "model.json").string(), ck);
        {
            std::ofstream os(dir / "history.csv");
            train::write_history_csv(os, rep.history);
        }
        std::string all;
        for (const char* f : {"model.json", "history.csv", "s_histogram.csv", "trajectories_real.csv",
                              "trajectories_fake.csv"})
            all += slurp(dir / f);
        files.push_back(all);
        ckpts.push_back(slurp(dir / "model.json"));
    }
    std::filesystem::remove_all(root);
    const bool same = ckpts[0] == ckpts[1] && files[0] == files[1] && !ckpts[0].empty();
    return {same, std::string("checkpoint + 4 reports, run 1 (1 thread) vs run 2 (3 threads): ") +
                      (same ? "bit-identical" : "DIFFER") + " (" + std::to_string(files[0].size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.push_back(std::stoi(tok));
        } else {
            report_dir = a;
        }
    }
    if (!report_dir.empty()) std::filesystem::create_directories(report_dir);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"volume preservation", volume_preservation},
        {"quadratic kinetic growth / rest", quadratic_growth},
        {"gradient certification", gradient_certification},
        {"energy-drift ordering", drift_ordering},
        {"cost accounting", cost_accounting},
        {"synthetic benchmark + null control", synthetic_benchmark},
        {"omitted-term diagnostic", omitted_term},
        {"replication invariance", replication_invariance},
        {"ablation directions", ablation_directions},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ". " << criteria[i].first << " | " << o.detail << " | "
                  << fmt(seconds_since(t0), 3) << " s" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
