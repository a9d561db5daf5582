#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relvar/series.hpp"

namespace relvar::mi {

// Estimator parameters for the adaptive partition. chi2_threshold is the
// chi-square(3 dof) critical value for the 4-way uniformity test; a cell is
// split only while the test rejects uniformity and the cell still holds at
// least min_cell_count points.
struct MiConfig {
    double chi2_threshold = 7.815;  // chi-square, 3 dof, 95%
    int min_cell_count = 8;
    bool clamp_negative = true;

    void validate() const {
        if (!(chi2_threshold > 0.0)) raise(errc::invalid_config, "chi2_threshold must be > 0");
        if (min_cell_count < 4) raise(errc::invalid_config, "min_cell_count must be >= 4");
    }
};

struct DependenceScore {
    double mi_nats = 0.0;  // clamped at zero unless clamp_negative is off
    double raw_mi = 0.0;   // unclamped estimate, kept for diagnostics
    double pearson = 0.0;
    double delta = 0.0;    // sqrt(1 - exp(-2 mi_nats))
};

// One node of the partition over the integer rank grid [0, n)^2. Intervals
// are half-open; a cell either is terminal or has exactly four children
// stored contiguously starting at first_child.
struct PartitionCell {
    std::uint32_t x_lo, x_hi, y_lo, y_hi;
    std::uint32_t count;
    std::int32_t first_child = -1;

    bool terminal() const noexcept { return first_child < 0; }
    double x_width(std::size_t n) const noexcept {
        return static_cast<double>(x_hi - x_lo) / static_cast<double>(n);
    }
    double y_width(std::size_t n) const noexcept {
        return static_cast<double>(y_hi - y_lo) / static_cast<double>(n);
    }
};

struct Partition {
    std::size_t n_samples = 0;
    std::vector<PartitionCell> cells;  // cells[0] is the root
};

// 0-based integer ranks; ties keep original index order (stable).
std::vector<std::uint32_t> rank_indices(std::span<const double> values);

// (rank - 0.5) / N with 1-based ranks, ties broken by original index.
ScalarSeries rank_transform(const ScalarSeries& x);

// Recursive variable-bin-width partition of the rank grid. A cell holding at
// least cfg.min_cell_count points is split into four at the marginal medians
// of its rank intervals (the interval midpoints: rank marginals are uniform);
// the split is kept when the uniformity statistic
//   T = sum_i (n_i - n/4)^2 / (n/4)
// reaches cfg.chi2_threshold, otherwise the cell is terminal.
Partition build_partition(std::span<const std::uint32_t> x_ranks,
                          std::span<const std::uint32_t> y_ranks, const MiConfig& cfg);

// sum over terminal cells of (n_c/N) ln[(n_c/N) / (w_x w_y)], in nats.
// Terms are accumulated in sorted order so the result is independent of
// traversal order (and therefore exactly symmetric in x and y).
double partition_mi(const Partition& partition);

// Pearson correlation from population moments, clamped to [-1, 1].
double pearson_correlation(const ScalarSeries& x, const ScalarSeries& y);

// delta = sqrt(1 - exp(-2 I)); maps MI in nats onto a [0, 1) correlation
// scale (identity with |rho| in the bivariate Gaussian case).
double normalized_dependence(double mi_nats);

// Analytic MI of a bivariate Gaussian with correlation rho, in nats.
double gaussian_mi(double rho);

// Full dependence estimate between two series: rank transform, adaptive
// partition, MI, Pearson, delta.
DependenceScore mutual_information(const ScalarSeries& x, const ScalarSeries& y,
                                   const MiConfig& cfg = {});

}  // namespace relvar::mi
