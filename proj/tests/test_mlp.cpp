#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "relvar/mlp.hpp"
#include "relvar/rng.hpp"
#include "test_util.hpp"

using namespace relvar;
using regressor::MlpModel;
using regressor::TrainConfig;

namespace {

std::shared_ptr<const std::vector<std::string>> universe_of(const data::Dataset& d,
                                                            const std::string& target) {
    std::vector<std::string> names;
    for (const auto& n : d.names) {
        if (n != target) names.push_back(n);
    }
    return std::make_shared<const std::vector<std::string>>(std::move(names));
}

search::FeatureSubset full_subset(const data::Dataset& d, const std::string& target) {
    auto u = universe_of(d, target);
    return {u, (1ull << u->size()) - 1};
}

// Identity-normalization model with random weights, for derivative checks.
MlpModel random_model(rng::Xoshiro256& gen, int input_dim, int hidden_dim) {
    MlpModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    const auto h = static_cast<std::size_t>(hidden_dim);
    const auto d = static_cast<std::size_t>(input_dim);
    m.w1.resize(h * d);
    m.b1.resize(h);
    m.w2.resize(h);
    for (auto& w : m.w1) w = gen.uniform(-1.0, 1.0);
    for (auto& w : m.b1) w = gen.uniform(-1.0, 1.0);
    for (auto& w : m.w2) w = gen.uniform(-1.0, 1.0);
    m.b2 = gen.uniform(-1.0, 1.0);
    m.norm.feature_mean.assign(d, 0.0);
    m.norm.feature_std.assign(d, 1.0);
    m.norm.target_mean = 0.0;
    m.norm.target_std = 1.0;
    for (int c = 0; c < input_dim; ++c) m.feature_names.push_back("x" + std::to_string(c + 1));
    m.target_name = "target";
    return m;
}

double* param_at(MlpModel& m, std::size_t p) {
    const auto h = static_cast<std::size_t>(m.hidden_dim);
    const auto d = static_cast<std::size_t>(m.input_dim);
    if (p < h * d) return &m.w1[p];
    if (p < h * d + h) return &m.b1[p - h * d];
    if (p < h * d + 2 * h) return &m.w2[p - h * d - h];
    return &m.b2;
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("split_rows sizes and determinism") {
    const auto s100 = regressor::split_rows(100, 42);
    CHECK(s100.train.size() == 80);
    CHECK(s100.val.size() == 10);
    CHECK(s100.test.size() == 10);

    const auto s103 = regressor::split_rows(103, 42);
    CHECK(s103.train.size() == 83);
    CHECK(s103.val.size() == 10);
    CHECK(s103.test.size() == 10);

    const auto again = regressor::split_rows(100, 42);
    CHECK(again.train == s100.train);
    CHECK(again.val == s100.val);
    CHECK(again.test == s100.test);

    const auto other = regressor::split_rows(100, 43);
    CHECK(other.train != s100.train);

    CHECK_THROWS_AS(regressor::split_rows(9, 1), error);
}

TEST_CASE("split_rows partitions every row exactly once") {
    const auto s = regressor::split_rows(137, 7);
    std::vector<std::size_t> all;
    all.insert(all.end(), s.train.begin(), s.train.end());
    all.insert(all.end(), s.val.begin(), s.val.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(137);
    std::iota(expected.begin(), expected.end(), 0u);
    CHECK(all == expected);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    CHECK(std::is_sorted(s.val.begin(), s.val.end()));
    CHECK(std::is_sorted(s.test.begin(), s.test.end()));
}

TEST_CASE("split_dataset materializes the three parts") {
    data::SynthSpec spec;
    spec.n_features = 2;
    spec.relevant = {1};
    spec.generator = "x1";
    spec.n_rows = 100;
    spec.seed = 1;
    const auto d = data::synth_generate(spec);
    TrainConfig cfg;
    cfg.seed = 5;
    const auto parts = regressor::split_dataset(d, cfg);
    CHECK(parts[0].rows() == 80);
    CHECK(parts[1].rows() == 10);
    CHECK(parts[2].rows() == 10);
    // first train row matches the original at the first train index
    const auto idx = regressor::split_rows(100, 5);
    CHECK(parts[0].column("x1")[0] == d.column("x1")[idx.train[0]]);
}

TEST_CASE("forward of degenerate networks") {
    rng::Xoshiro256 gen(1);
    auto zero = random_model(gen, 3, 4);
    std::fill(zero.w1.begin(), zero.w1.end(), 0.0);
    std::fill(zero.b1.begin(), zero.b1.end(), 0.0);
    std::fill(zero.w2.begin(), zero.w2.end(), 0.0);
    zero.b2 = 0.0;
    const std::vector<double> x = {0.3, -1.0, 2.0};
    CHECK(regressor::forward(zero, x) == doctest::Approx(0.0));

    auto constant = random_model(gen, 3, 1);
    std::fill(constant.w1.begin(), constant.w1.end(), 0.0);
    constant.b1[0] = 0.0;
    constant.w2[0] = 17.0;  // tanh(0) = 0, so only b2 survives
    constant.b2 = 4.5;
    CHECK(regressor::forward(constant, x) == doctest::Approx(4.5));

    const std::vector<double> short_x = {1.0};
    CHECK_THROWS_AS(regressor::forward(constant, short_x), error);
}

TEST_CASE("analytic jacobian matches central finite differences") {
    rng::Xoshiro256 gen(1234);
    const double step = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + static_cast<int>(gen.below(4));
        const int h = 1 + static_cast<int>(gen.below(4));
        MlpModel m = random_model(gen, d, h);
        std::vector<double> x(static_cast<std::size_t>(d));
        for (auto& v : x) v = gen.uniform(-2.0, 2.0);

        std::vector<double> grad(m.parameter_count());
        regressor::jacobian_row(m, x, grad);

        for (std::size_t p = 0; p < m.parameter_count(); ++p) {
            MlpModel plus = m, minus = m;
            *param_at(plus, p) += step;
            *param_at(minus, p) -= step;
            const double fd =
                (regressor::forward(plus, x) - regressor::forward(minus, x)) / (2 * step);
            CHECK(std::abs(grad[p] - fd) <= 1e-5 * (1.0 + std::abs(grad[p])));
        }
    }
}

TEST_CASE("noiseless linear target trains to near zero error") {
    data::SynthSpec spec;
    spec.n_features = 2;
    spec.relevant = {1};
    spec.generator = "2*x1 + 1";
    spec.n_rows = 500;
    spec.seed = 11;
    const auto d = data::synth_generate(spec);

    TrainConfig cfg;
    cfg.hidden_dim = 8;
    cfg.seed = 2;
    const auto [model, trace] = regressor::train_lm(d, "target", full_subset(d, "target"), cfg);

    const auto split = regressor::split_rows(d.rows(), cfg.seed);
    const auto pred = regressor::predict(model, d);
    const auto& target = d.column("target");

    std::vector<double> pt, ot, ptr, otr;
    for (auto r : split.test) {
        pt.push_back(pred[r]);
        ot.push_back(target[r]);
    }
    for (auto r : split.train) {
        ptr.push_back(pred[r]);
        otr.push_back(target[r]);
    }
    const double test_rms = regressor::rms_error(mi::ScalarSeries(pt), mi::ScalarSeries(ot));
    const double train_rms = regressor::rms_error(mi::ScalarSeries(ptr), mi::ScalarSeries(otr));
    CHECK(test_rms <= 0.02);
    CHECK(train_rms <= 0.02);
}

TEST_CASE("noisy nonlinear target reaches the noise floor") {
    data::SynthSpec spec;
    spec.n_features = 2;
    spec.relevant = {1, 2};
    spec.generator = "sin(3*x1)*x2";
    spec.noise_sigma = 0.05;
    spec.n_rows = 2000;
    spec.seed = 12;
    const auto d = data::synth_generate(spec);

    TrainConfig cfg;
    cfg.hidden_dim = 16;
    cfg.seed = 3;
    const auto [model, trace] = regressor::train_lm(d, "target", full_subset(d, "target"), cfg);

    const auto split = regressor::split_rows(d.rows(), cfg.seed);
    const auto pred = regressor::predict(model, d);
    const auto& target = d.column("target");
    std::vector<double> pt, ot;
    for (auto r : split.test) {
        pt.push_back(pred[r]);
        ot.push_back(target[r]);
    }
    CHECK(regressor::rms_error(mi::ScalarSeries(pt), mi::ScalarSeries(ot)) <= 0.10);
}

TEST_CASE("training is bitwise deterministic") {
    data::SynthSpec spec;
    spec.n_features = 3;
    spec.relevant = {1, 2};
    spec.generator = "x1 + x2^2";
    spec.noise_sigma = 0.02;
    spec.n_rows = 200;
    spec.seed = 4;
    const auto d = data::synth_generate(spec);

    TrainConfig cfg;
    cfg.hidden_dim = 6;
    cfg.seed = 9;
    const auto [m1, t1] = regressor::train_lm(d, "target", full_subset(d, "target"), cfg);
    const auto [m2, t2] = regressor::train_lm(d, "target", full_subset(d, "target"), cfg);
    CHECK(m1.w1 == m2.w1);
    CHECK(m1.b1 == m2.b1);
    CHECK(m1.w2 == m2.w2);
    CHECK(m1.b2 == m2.b2);
    CHECK(t1.epochs.size() == t2.epochs.size());
    CHECK(t1.best_val_rms == t2.best_val_rms);
}

TEST_CASE("accepted train RMS is strictly decreasing") {
    data::SynthSpec spec;
    spec.n_features = 2;
    spec.relevant = {1};
    spec.generator = "tanh(2*x1)";
    spec.noise_sigma = 0.05;
    spec.n_rows = 300;
    spec.seed = 6;
    const auto d = data::synth_generate(spec);

    TrainConfig cfg;
    cfg.hidden_dim = 5;
    cfg.seed = 1;
    const auto [model, trace] = regressor::train_lm(d, "target", full_subset(d, "target"), cfg);

    double last = std::numeric_limits<double>::infinity();
    std::size_t accepted = 0;
    for (const auto& e : trace.epochs) {
        if (!e.accepted) continue;
        CHECK(e.train_rms < last);
        last = e.train_rms;
        ++accepted;
    }
    CHECK(accepted >= 1);
}

TEST_CASE("returned model achieves the best recorded val RMS") {
    data::SynthSpec spec;
    spec.n_features = 2;
    spec.relevant = {1, 2};
    spec.generator = "x1*x2";
    spec.noise_sigma = 0.1;
    spec.n_rows = 400;
    spec.seed = 8;
    const auto d = data::synth_generate(spec);

    TrainConfig cfg;
    cfg.hidden_dim = 6;
    cfg.seed = 14;
    const auto [model, trace] = regressor::train_lm(d, "target", full_subset(d, "target"), cfg);

    double best_seen = trace.best_val_rms;
    for (const auto& e : trace.epochs) {
        if (e.accepted) CHECK(e.val_rms >= best_seen);
    }

    // recompute the returned snapshot's val RMS independently
    const auto split = regressor::split_rows(d.rows(), cfg.seed);
    const auto pred = regressor::predict(model, d);
    const auto& target = d.column("target");
    std::vector<double> pv, ov;
    for (auto r : split.val) {
        pv.push_back(pred[r]);
        ov.push_back(target[r]);
    }
    CHECK(regressor::rms_error(mi::ScalarSeries(pv), mi::ScalarSeries(ov)) ==
          doctest::Approx(trace.best_val_rms).epsilon(1e-12));
}

TEST_CASE("standardization stats round trip") {
    data::SynthSpec spec;
    spec.n_features = 2;
    spec.relevant = {1};
    spec.generator = "5*x1 + 100";
    spec.n_rows = 100;
    spec.seed = 15;
    const auto d = data::synth_generate(spec);
    TrainConfig cfg;
    cfg.hidden_dim = 3;
    cfg.max_epochs = 3;
    const auto [model, trace] = regressor::train_lm(d, "target", full_subset(d, "target"), cfg);
    for (double v : {101.0, 103.5}) {
        const double z = (v - model.norm.target_mean) / model.norm.target_std;
        CHECK(z * model.norm.target_std + model.norm.target_mean ==
              doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("training error identities") {
    data::SynthSpec spec;
    spec.n_features = 2;
    spec.relevant = {1};
    spec.generator = "x1";
    spec.n_rows = 50;
    spec.seed = 16;
    auto d = data::synth_generate(spec);

    TrainConfig cfg;
    cfg.hidden_dim = 3;

    search::FeatureSubset empty{universe_of(d, "target"), 0};
    CHECK_THROWS_AS(regressor::train_lm(d, "target", empty, cfg), error);

    // constant feature on the training split
    data::Dataset flat = d;
    std::fill(flat.columns[1].begin(), flat.columns[1].end(), 2.5);
    try {
        regressor::train_lm(flat, "target", full_subset(flat, "target"), cfg);
        FAIL("expected zero_variance");
    } catch (const error& e) {
        CHECK(e.code() == errc::zero_variance);
    }

    auto target_in_features = std::make_shared<const std::vector<std::string>>(
        std::vector<std::string>{"x1", "target"});
    CHECK_THROWS_AS(
        regressor::train_lm(d, "target", search::FeatureSubset{target_in_features, 3}, cfg),
        error);
}

TEST_CASE("rms_error hand values") {
    using mi::ScalarSeries;
    CHECK(regressor::rms_error(ScalarSeries({1, 2, 3}), ScalarSeries({1, 2, 3})) ==
          doctest::Approx(0.0));
    CHECK(regressor::rms_error(ScalarSeries({1, 1}), ScalarSeries({0, 2})) ==
          doctest::Approx(1.0));
    CHECK(regressor::rms_error(ScalarSeries({4, 5, 6}), ScalarSeries({1, 2, 3})) ==
          doctest::Approx(3.0));
    CHECK_THROWS_AS(regressor::rms_error(ScalarSeries({1.0}), ScalarSeries({1.0, 2.0})), error);
}

TEST_CASE("predict preserves row order and count") {
    data::SynthSpec spec;
    spec.n_features = 2;
    spec.relevant = {1};
    spec.generator = "x1";
    spec.n_rows = 60;
    spec.seed = 17;
    const auto d = data::synth_generate(spec);
    TrainConfig cfg;
    cfg.hidden_dim = 4;
    cfg.max_epochs = 10;
    const auto [model, trace] = regressor::train_lm(d, "target", full_subset(d, "target"), cfg);

    const auto pred = regressor::predict(model, d);
    REQUIRE(pred.size() == d.rows());

    // permuting rows permutes predictions identically
    data::Dataset reversed = d;
    for (auto& col : reversed.columns) std::reverse(col.begin(), col.end());
    const auto rpred = regressor::predict(model, reversed);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        CHECK(rpred[i] == pred[pred.size() - 1 - i]);
    }

    // single-row prediction equals forward on the standardized row
    data::Dataset one;
    one.names = d.names;
    one.columns.resize(d.columns.size());
    for (std::size_t c = 0; c < d.columns.size(); ++c) one.columns[c] = {d.columns[c][5]};
    const auto p1 = regressor::predict(model, one);
    REQUIRE(p1.size() == 1);
    CHECK(p1[0] == pred[5]);
}

TEST_CASE("model file round trip") {
    testutil::TempDir dir("model");
    rng::Xoshiro256 gen(55);
    const MlpModel m = random_model(gen, 3, 5);
    const auto path = dir.file("m.rvm");
    regressor::save_model(m, path);
    const auto back = regressor::load_model(path);
    CHECK(back.input_dim == m.input_dim);
    CHECK(back.hidden_dim == m.hidden_dim);
    CHECK(back.w1 == m.w1);
    CHECK(back.b1 == m.b1);
    CHECK(back.w2 == m.w2);
    CHECK(back.b2 == m.b2);
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.target_name == m.target_name);
    CHECK(back.norm.feature_mean == m.norm.feature_mean);
    CHECK(back.norm.target_std == m.norm.target_std);
}

TEST_CASE("model file validation") {
    testutil::TempDir dir("model");
    const auto bad = dir.file("bad.rvm");
    testutil::write_file(bad, "not a model file at all");
    CHECK_THROWS_AS(regressor::load_model(bad), error);

    rng::Xoshiro256 gen(56);
    const MlpModel m = random_model(gen, 2, 3);
    const auto path = dir.file("m.rvm");
    regressor::save_model(m, path);
    auto bytes = testutil::read_file(path);
    bytes.resize(bytes.size() / 2);  // truncate
    const auto trunc = dir.file("trunc.rvm");
    testutil::write_file(trunc, bytes);
    CHECK_THROWS_AS(regressor::load_model(trunc), error);

    CHECK_THROWS_AS(regressor::load_model(dir.file("missing.rvm")), error);
}

}  // TEST_SUITE
