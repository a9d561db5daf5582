#include <cmath>
#include <vector>

#include "doctest.h"
#include "relvar/mi.hpp"
#include "relvar/rng.hpp"
#include "test_util.hpp"

using namespace relvar;
using mi::ScalarSeries;

namespace {

ScalarSeries uniform_series(std::uint64_t seed, std::size_t n) {
    rng::Xoshiro256 gen(rng::derive_stream(seed, 0x5e1e));
    std::vector<double> v(n);
    for (auto& e : v) e = gen.uniform01();
    return ScalarSeries(std::move(v));
}

}  // namespace

TEST_SUITE("mi") {

TEST_CASE("rank_transform basics") {
    const auto r = mi::rank_transform(ScalarSeries({10.0, 30.0, 20.0}));
    CHECK(r[0] == doctest::Approx(0.5 / 3));
    CHECK(r[1] == doctest::Approx(2.5 / 3));
    CHECK(r[2] == doctest::Approx(1.5 / 3));

    const auto tied = mi::rank_transform(ScalarSeries({5.0, 5.0}));
    CHECK(tied[0] == doctest::Approx(0.25));
    CHECK(tied[1] == doctest::Approx(0.75));

    CHECK_THROWS_AS(mi::rank_transform(ScalarSeries({1.0})), error);
}

TEST_CASE("rank_transform is strictly increasing on strictly increasing input") {
    rng::Xoshiro256 gen(5);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> v(200);
        double acc = -3.0;
        for (auto& e : v) {
            acc += gen.uniform(1e-6, 0.1);
            e = acc;
        }
        const auto r = mi::rank_transform(ScalarSeries(v));
        for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] > r[i - 1]);
    }
}

TEST_CASE("scalar series rejects non-finite values") {
    CHECK_THROWS_AS(ScalarSeries({1.0, std::nan("")}), error);
    CHECK_THROWS_AS(ScalarSeries({1.0, INFINITY}), error);
}

TEST_CASE("pearson of exact linear series") {
    CHECK(mi::pearson_correlation(ScalarSeries({1, 2, 3}), ScalarSeries({1, 2, 3})) ==
          doctest::Approx(1.0));
    CHECK(mi::pearson_correlation(ScalarSeries({1, 2, 3}), ScalarSeries({3, 2, 1})) ==
          doctest::Approx(-1.0));
}

TEST_CASE("pearson recovers the generating correlation") {
    // oracle: sample from a known covariance, compare to the parameter
    std::vector<double> x, y;
    testutil::sample_bivariate_gaussian(11, 0.5, 10000, x, y);
    const double rho = mi::pearson_correlation(ScalarSeries(x), ScalarSeries(y));
    CHECK(std::abs(rho - 0.5) <= 0.03);
}

TEST_CASE("pearson error identities") {
    CHECK_THROWS_AS(mi::pearson_correlation(ScalarSeries({1, 2}), ScalarSeries({1, 2, 3})),
                    error);
    try {
        mi::pearson_correlation(ScalarSeries({2, 2, 2}), ScalarSeries({1, 2, 3}));
        FAIL("expected zero_variance");
    } catch (const error& e) {
        CHECK(e.code() == errc::zero_variance);
    }
}

TEST_CASE("pearson stays within [-1, 1]") {
    rng::Xoshiro256 gen(17);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> x(50), y(50);
        for (std::size_t i = 0; i < 50; ++i) {
            x[i] = gen.uniform(-5, 5);
            y[i] = 0.99 * x[i] + 1e-6 * gen.normal();
        }
        const double rho = mi::pearson_correlation(ScalarSeries(x), ScalarSeries(y));
        CHECK(rho <= 1.0);
        CHECK(rho >= -1.0);
    }
}

TEST_CASE("gaussian_mi closed form") {
    CHECK(mi::gaussian_mi(0.0) == doctest::Approx(0.0));
    CHECK(mi::gaussian_mi(0.9) == doctest::Approx(0.8303661).epsilon(1e-6));
    CHECK(mi::gaussian_mi(-0.9) == doctest::Approx(mi::gaussian_mi(0.9)));
    CHECK_THROWS_AS(mi::gaussian_mi(1.0), error);
    CHECK_THROWS_AS(mi::gaussian_mi(-1.2), error);
}

TEST_CASE("normalized_dependence") {
    CHECK(mi::normalized_dependence(0.0) == doctest::Approx(0.0));
    // Gaussian identity: delta(gaussian_mi(rho)) == |rho|
    CHECK(mi::normalized_dependence(mi::gaussian_mi(0.9)) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(mi::normalized_dependence(mi::gaussian_mi(0.25)) ==
          doctest::Approx(0.25).epsilon(1e-12));
    CHECK(mi::normalized_dependence(50.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(mi::normalized_dependence(-0.001), error);
}

TEST_CASE("independent series score near zero") {
    const auto x = uniform_series(1, 10000);
    const auto y = uniform_series(2, 10000);
    const auto score = mi::mutual_information(x, y);
    CHECK(score.mi_nats <= 0.02);
    CHECK(score.raw_mi >= -0.02);
    CHECK(std::abs(score.pearson) <= 0.05);
}

TEST_CASE("gaussian consistency against the closed form") {
    // one seed per rho here; the acceptance suite runs the full 5-seed sweep
    for (double rho : {0.2, 0.5, 0.8, 0.9, 0.95}) {
        std::vector<double> x, y;
        testutil::sample_bivariate_gaussian(21, rho, 20000, x, y);
        const auto score = mi::mutual_information(ScalarSeries(x), ScalarSeries(y));
        CHECK(std::abs(score.mi_nats - mi::gaussian_mi(rho)) <= 0.05);
        CHECK(std::abs(score.delta - rho) <= 0.05);
    }
}

TEST_CASE("perfect dependence floors") {
    const auto x = uniform_series(3, 10000);
    const auto score = mi::mutual_information(x, x);
    CHECK(score.mi_nats >= 2.0);
    CHECK(score.delta >= 0.98);
    CHECK(score.pearson == doctest::Approx(1.0));
}

TEST_CASE("symmetry is exact") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::vector<double> x, y;
        const double rho = -0.9 + 1.8 * static_cast<double>(seed) / 21.0;
        testutil::sample_bivariate_gaussian(seed, rho, 2000, x, y);
        const auto xy = mi::mutual_information(ScalarSeries(x), ScalarSeries(y));
        const auto yx = mi::mutual_information(ScalarSeries(y), ScalarSeries(x));
        CHECK(xy.mi_nats == yx.mi_nats);
        CHECK(xy.raw_mi == yx.raw_mi);
        CHECK(xy.delta == yx.delta);
    }
}

TEST_CASE("monotone transform invariance is exact") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::vector<double> x, y;
        testutil::sample_bivariate_gaussian(seed, 0.6, 3000, x, y);
        const auto base = mi::mutual_information(ScalarSeries(x), ScalarSeries(y));

        std::vector<double> ex(x.size()), cube(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            ex[i] = std::exp(x[i]);
            cube[i] = x[i] * x[i] * x[i];
        }
        CHECK(mi::mutual_information(ScalarSeries(ex), ScalarSeries(y)).mi_nats == base.mi_nats);
        CHECK(mi::mutual_information(ScalarSeries(cube), ScalarSeries(y)).mi_nats ==
              base.mi_nats);
    }
}

TEST_CASE("mutual_information determinism") {
    std::vector<double> x, y;
    testutil::sample_bivariate_gaussian(5, 0.4, 1000, x, y);
    const auto a = mi::mutual_information(ScalarSeries(x), ScalarSeries(y));
    const auto b = mi::mutual_information(ScalarSeries(x), ScalarSeries(y));
    CHECK(a.mi_nats == b.mi_nats);
    CHECK(a.pearson == b.pearson);
    CHECK(a.delta == b.delta);
}

TEST_CASE("mutual_information input contracts") {
    const auto x = uniform_series(1, 40);
    CHECK_THROWS_AS(mi::mutual_information(x, uniform_series(2, 41)), error);
    try {
        mi::mutual_information(uniform_series(1, 31), uniform_series(2, 31));  // < 4*min_cell
        FAIL("expected too_few_samples");
    } catch (const error& e) {
        CHECK(e.code() == errc::too_few_samples);
    }
    mi::MiConfig bad;
    bad.min_cell_count = 3;
    CHECK_THROWS_AS(mi::mutual_information(x, x, bad), error);
    bad = mi::MiConfig{};
    bad.chi2_threshold = 0.0;
    CHECK_THROWS_AS(mi::mutual_information(x, x, bad), error);
}

TEST_CASE("partition tiles the rank square exactly") {
    rng::Xoshiro256 gen(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 64 + static_cast<std::size_t>(gen.below(4000));
        const double rho = gen.uniform(-0.95, 0.95);
        std::vector<double> x, y;
        testutil::sample_bivariate_gaussian(1000 + static_cast<std::uint64_t>(trial), rho, n, x,
                                            y);
        const auto xr = mi::rank_indices(x);
        const auto yr = mi::rank_indices(y);
        const auto part = mi::build_partition(xr, yr, mi::MiConfig{});

        std::size_t terminal_count = 0;
        double terminal_area = 0.0;
        for (const auto& cell : part.cells) {
            if (cell.terminal()) {
                terminal_count += cell.count;
                terminal_area += cell.x_width(n) * cell.y_width(n);
            } else {
                // children tile the parent exactly and carry its points
                const auto& c0 = part.cells[static_cast<std::size_t>(cell.first_child)];
                const auto& c1 = part.cells[static_cast<std::size_t>(cell.first_child) + 1];
                const auto& c2 = part.cells[static_cast<std::size_t>(cell.first_child) + 2];
                const auto& c3 = part.cells[static_cast<std::size_t>(cell.first_child) + 3];
                CHECK(c0.count + c1.count + c2.count + c3.count == cell.count);
                CHECK(c0.x_lo == cell.x_lo);
                CHECK(c0.y_lo == cell.y_lo);
                CHECK(c1.x_hi == cell.x_hi);
                CHECK(c0.x_hi == c1.x_lo);
                CHECK(c0.y_hi == c2.y_lo);
                CHECK(c2.x_lo == cell.x_lo);
                CHECK(c3.x_hi == cell.x_hi);
                CHECK(c3.y_hi == cell.y_hi);
                CHECK(c2.y_hi == cell.y_hi);
            }
        }
        CHECK(terminal_count == n);
        CHECK(std::abs(terminal_area - 1.0) <= 1e-9);
    }
}

TEST_CASE("clamp_negative flag") {
    // the whole-square partition estimates exactly zero, so the clamp is a
    // sign no-op there; verify the flag wiring instead
    const auto x = uniform_series(8, 5000);
    const auto y = uniform_series(9, 5000);
    mi::MiConfig keep_raw;
    keep_raw.clamp_negative = false;
    const auto clamped = mi::mutual_information(x, y);
    const auto raw = mi::mutual_information(x, y, keep_raw);
    CHECK(clamped.mi_nats >= 0.0);
    CHECK(raw.mi_nats == raw.raw_mi);
    CHECK(clamped.raw_mi == raw.raw_mi);
}

}  // TEST_SUITE
