#include <doctest.h>

#include <cmath>
#include <random>

#include "haad/error.hpp"
#include "haad/graphlap.hpp"
#include "haad/training.hpp"

using namespace haad;
using num::Mat;

namespace {

struct Toy {
    num::SparseSym l;
    potential::PotentialModel model;
    Dataset data;
};

Toy make_toy(std::uint64_t seed, std::size_t h = 3, std::size_t w = 3) {
    Toy t;
    t.l = graph::laplacian(graph::build_knn_graph(graph::PatchGrid(h, w)));
    potential::ModelShape shape{4, 6, 5};
    t.model = potential::init_model(shape, seed);
    std::mt19937_64 rng(seed + 99);
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : t.model.classifier.w.span()) v = g(rng);
    t.data.h_p = h;
    t.data.w_p = w;
    t.data.d_in = 4;
    for (int i = 0; i < 6; ++i) {
        Mat x(h * w, 4);
        for (double& v : x.span()) v = g(rng);
        t.data.features.push_back(x);
        t.data.labels.push_back(i % 2 == 0 ? kLabelReal : kLabelFake);
    }
    return t;
}

}  // namespace

TEST_CASE("classify and bce examples") {
    potential::Classifier c;
    CHECK(train::classify({0.7, 0.2}, c) == 0.5);
    c.w = Mat{{1.0, 0.0}};
    CHECK(train::classify({0.0, 3.0}, c) == 0.5);
    double prev = 0.0;
    for (double s = -5; s <= 5; s += 0.5) {
        const double y = train::classify({s, 0.0}, c);
        CHECK(y > prev);
        prev = y;
    }
    CHECK(train::bce_loss(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(train::bce_loss(0.9, 1) == doctest::Approx(0.105360515657826).epsilon(1e-12));
    CHECK(train::bce_loss(1e-30, 0) < 1e-11);
    CHECK(std::isfinite(train::bce_loss(0.0, 1)));
    CHECK_THROWS_AS(train::bce_loss(0.5, 2), ContractViolation);
}

TEST_CASE("bce from logit matches the clamped probability form") {
    for (double z : {-8.0, -2.0, -0.3, 0.0, 0.7, 3.0, 9.0}) {
        for (int y : {0, 1}) {
            CHECK(train::bce_from_logit(z, y) == doctest::Approx(train::bce_loss(num::sigmoid(z), y)).epsilon(1e-12));
        }
    }
    // saturated: -log(1 - sigmoid(z)) = softplus(z) ~ z + e^{-z}
    CHECK(train::bce_from_logit(20.0, 0) == doctest::Approx(20.0 + std::exp(-20.0)).epsilon(1e-15));
    CHECK(train::bce_from_logit(-20.0, 1) == doctest::Approx(20.0 + std::exp(-20.0)).epsilon(1e-15));
    // clamp bounds: -log(1e-12) and -log(1 - 1e-12)
    CHECK(train::bce_from_logit(100.0, 0) == doctest::Approx(-std::log(1e-12)).epsilon(1e-15));
    CHECK(train::bce_from_logit(100.0, 1) == doctest::Approx(1e-12).epsilon(1e-6));
    CHECK_THROWS_AS(train::bce_from_logit(std::nan(""), 1), NumericFault);
}

TEST_CASE("l_real and l_fake examples") {
    std::vector<stats::TrajStats> one{{2.0, 0.5}};
    CHECK(train::l_real(one) == 2.5);
    std::vector<stats::TrajStats> two{{1.0, 0.0}, {3.0, 1.0}};
    CHECK(train::l_real(two) == 2.5);
    bool empty = false;
    CHECK(train::l_real({}, &empty) == 0.0);
    CHECK(empty);
    std::vector<stats::TrajStats> f1{{1.5, 0.0}};
    CHECK(train::l_fake(f1, 1.0) == 0.0);
    std::vector<stats::TrajStats> f2{{0.4, 0.0}};
    CHECK(train::l_fake(f2, 1.0) == doctest::Approx(0.6).epsilon(1e-15));
    std::vector<stats::TrajStats> f3{{0.4, 0.0}, {1.5, 0.0}};
    CHECK(train::l_fake(f3, 1.0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(train::l_fake({}, 1.0, &empty) == 0.0);
    CHECK(empty);
}

TEST_CASE("total_loss breakdown") {
    potential::Classifier c;
    c.w = Mat{{0.3, -1.2}};
    c.b = Mat{{0.1}};
    std::vector<stats::TrajStats> st{{0.4, 0.2}, {1.3, 0.05}};
    std::vector<std::uint8_t> y{0, 1};
    train::LossConfig cfg;
    cfg.lambda = 0.7;
    cfg.gamma = 1.0;
    const auto b = train::total_loss(st, y, c, cfg);
    // independent scalar recomputation
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double p0 = sig(0.3 * 0.4 - 1.2 * 0.2 + 0.1);
    const double p1 = sig(0.3 * 1.3 - 1.2 * 0.05 + 0.1);
    const double cls = 0.5 * (-std::log(1 - p0) - std::log(p1));
    CHECK(b.cls == doctest::Approx(cls).epsilon(1e-12));
    CHECK(b.real_term == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(b.fake_term == 0.0);
    CHECK(std::abs(b.total - (b.cls + cfg.lambda * (b.real_term + b.fake_term))) <= 1e-12);

    cfg.lambda = 0.0;
    const auto b0 = train::total_loss(st, y, c, cfg);
    CHECK(b0.total == b0.cls);
}

TEST_CASE("tape readout matches plain rollout bit-for-bit") {
    for (auto kind : {dyn::Integrator::SymplecticEuler, dyn::Integrator::Euler, dyn::Integrator::Rk4}) {
        for (auto mode : {dyn::MassMode::Learned, dyn::MassMode::Identity}) {
            for (std::size_t steps : {1u, 4u}) {
                Toy t = make_toy(3);
                dyn::RolloutConfig rc;
                rc.integrator = kind;
                rc.mass_mode = mode;
                rc.steps = steps;
                const auto plain = train::score_sample(t.model, t.data.features[1], t.l, rc);
                const auto g = train::sample_gradient(t.model, t.data.features[1], 1, t.l, rc, {0.5, 0.5, 1.0});
                CHECK(plain.stats.s == g.score.stats.s);
                CHECK(plain.stats.d == g.score.stats.d);
                CHECK(plain.logit == g.score.logit);
            }
        }
    }
}

TEST_CASE("gradcheck toy passes and the corruption hook is caught") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        train::GradCheckOptions o;
        o.seed = seed;
        const auto rep = train::gradcheck_toy(o);
        CHECK(rep.groups.size() == 6);
        for (const auto& g : rep.groups) {
            INFO(g.group << " " << g.rel_error);
            CHECK(g.pass);
        }
    }
    train::GradCheckOptions o;
    o.corrupt_group = "mass";
    const auto rep = train::gradcheck_toy(o);
    CHECK_FALSE(rep.pass);
    for (const auto& g : rep.groups) CHECK(g.pass == (g.group != "mass"));
}

TEST_CASE("hinge gradient vanishes past the margin") {
    Toy t = make_toy(5);
    dyn::RolloutConfig rc;
    const auto sc = train::score_sample(t.model, t.data.features[1], t.l, rc);
    const auto g = train::sample_gradient(t.model, t.data.features[1], kLabelFake, t.l, rc,
                                          {0.0, 1.0, 0.5 * sc.stats.s});
    CHECK(g.contribution == 0.0);
    for (const auto& m : g.grads) {
        for (double v : m.span()) CHECK(v == 0.0);
    }
}

TEST_CASE("zero learning rate leaves the model unchanged") {
    Toy t = make_toy(7);
    auto before = t.model;
    train::AdamConfig a;
    a.lr = 0.0;
    auto opt = train::OptimState::init(t.model, a);
    std::vector<std::size_t> batch{0, 1, 2, 3};
    dyn::RolloutConfig rc;
    train::train_step(t.model, t.data, batch, opt, t.l, rc, {});
    CHECK(t.model == before);
}

TEST_CASE("first step descends along the certified gradient") {
    Toy t = make_toy(11);
    std::vector<std::size_t> batch{0, 1, 2, 3, 4, 5};
    dyn::RolloutConfig rc;
    train::LossConfig lc;
    const auto bg = train::loss_and_grad(t.model, t.data, batch, t.l, rc, lc);
    bool descended = false;
    for (double alpha = 1e-2; alpha >= 1e-8 && !descended; alpha /= 10) {
        auto m = t.model;
        auto ps = m.parameters();
        for (std::size_t j = 0; j < ps.size(); ++j) *ps[j].value = num::add_scaled(*ps[j].value, bg.grads[j], -alpha);
        descended = train::batch_loss(m, t.data, batch, t.l, rc, lc).total < bg.loss.total;
    }
    CHECK(descended);
}

TEST_CASE("threaded gradient equals serial gradient") {
    Toy t = make_toy(13);
    std::vector<std::size_t> batch{0, 1, 2, 3, 4, 5};
    dyn::RolloutConfig rc;
    const auto a = train::loss_and_grad(t.model, t.data, batch, t.l, rc, {}, 1);
    const auto b = train::loss_and_grad(t.model, t.data, batch, t.l, rc, {}, 3);
    CHECK(a.loss.total == b.loss.total);
    for (std::size_t j = 0; j < a.grads.size(); ++j) CHECK(a.grads[j] == b.grads[j]);
}

TEST_CASE("adam aborts on a NaN gradient naming the parameter") {
    Toy t = make_toy(1);
    auto opt = train::OptimState::init(t.model, {});
    std::vector<Mat> grads;
    for (const auto& p : t.model.parameters()) grads.emplace_back(p.value->rows(), p.value->cols());
    grads[9](0, 0) = std::nan("");
    const auto before = t.model;
    try {
        train::adam_update(t.model, opt, grads);
        FAIL("expected NumericFault");
    } catch (const NumericFault& e) {
        CHECK(std::string(e.what()).find("mass.hidden.bias") != std::string::npos);
    }
    CHECK(t.model == before);
}

TEST_CASE("train: zero epochs, determinism, single class") {
    Toy t = make_toy(17);
    train::TrainConfig cfg;
    cfg.shape = t.model.shape;
    cfg.seed = 4;
    cfg.epochs = 0;
    auto r0 = train::train(t.data, nullptr, t.l, cfg);
    CHECK(r0.model == train::initial_model(cfg));
    CHECK(r0.history.empty());

    cfg.epochs = 2;
    cfg.batch_size = 4;
    auto r1 = train::train(t.data, &t.data, t.l, cfg);
    auto r2 = train::train(t.data, &t.data, t.l, cfg);
    CHECK(r1.model == r2.model);
    REQUIRE(r1.history.size() == 2);
    for (const auto& h : r1.history) {
        CHECK(std::abs(h.loss.total - (h.loss.cls + cfg.loss.lambda * (h.loss.real_term + h.loss.fake_term))) <= 1e-12);
        CHECK(h.auc >= 0.0);
    }

    Dataset one = t.data;
    for (auto& y : one.labels) y = kLabelReal;
    CHECK_THROWS_AS(train::train(one, nullptr, t.l, cfg), ConfigError);
}
