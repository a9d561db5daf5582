#include "relvar/mi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "relvar/kernels.hpp"

namespace relvar::mi {

std::vector<std::uint32_t> rank_indices(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    // stable sort on value alone leaves ties in original index order
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
    std::vector<std::uint32_t> ranks(n);
    for (std::uint32_t r = 0; r < n; ++r) ranks[order[r]] = r;
    return ranks;
}

ScalarSeries rank_transform(const ScalarSeries& x) {
    if (x.size() < 2) raise(errc::too_few_samples, "rank_transform needs length >= 2");
    const auto ranks = rank_indices(x.values());
    const double n = static_cast<double>(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = (static_cast<double>(ranks[i]) + 0.5) / n;
    }
    return ScalarSeries(std::move(out));
}

namespace {

struct WorkItem {
    std::uint32_t cell;
    std::vector<std::uint32_t> points;  // sample indices inside the cell
};

}  // namespace

Partition build_partition(std::span<const std::uint32_t> x_ranks,
                          std::span<const std::uint32_t> y_ranks, const MiConfig& cfg) {
    cfg.validate();
    const std::size_t n = x_ranks.size();
    if (y_ranks.size() != n) raise(errc::length_mismatch, "rank arrays differ in length");
    if (n < 4 * static_cast<std::size_t>(cfg.min_cell_count)) {
        raise(errc::too_few_samples, "need at least 4*min_cell_count samples, got " +
                                         std::to_string(n));
    }

    Partition partition;
    partition.n_samples = n;
    partition.cells.push_back({0u, static_cast<std::uint32_t>(n), 0u,
                               static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n), -1});

    std::vector<WorkItem> stack;
    {
        std::vector<std::uint32_t> all(n);
        std::iota(all.begin(), all.end(), 0u);
        stack.push_back({0u, std::move(all)});
    }

    while (!stack.empty()) {
        WorkItem item = std::move(stack.back());
        stack.pop_back();
        const std::size_t count = item.points.size();
        if (count < static_cast<std::size_t>(cfg.min_cell_count)) continue;

        // Split at the midpoints of the rank intervals, so each child covers
        // a quarter of the parent's area and the expected count under
        // within-cell uniformity is exactly n/4. A cell with >= 4 points
        // spans at least 4 ranks per axis, so the midpoints are interior and
        // the split always shrinks the cell.
        const PartitionCell parent = partition.cells[item.cell];
        const std::uint32_t bx = parent.x_lo + (parent.x_hi - parent.x_lo) / 2;
        const std::uint32_t by = parent.y_lo + (parent.y_hi - parent.y_lo) / 2;

        // Quadrants: 0 = low-x/low-y, 1 = high-x/low-y, 2 = low-x/high-y,
        // 3 = high-x/high-y. Order within each list follows the parent.
        std::vector<std::uint32_t> quadrant[4];
        for (auto p : item.points) {
            quadrant[(y_ranks[p] >= by) * 2 + (x_ranks[p] >= bx)].push_back(p);
        }

        // T = sum (n_i - n/4)^2 / (n/4) = S / (4n) with S = sum (4 n_i - n)^2.
        // S is exact in integers, so the split decision cannot depend on
        // summation order (this is what keeps the estimator symmetric).
        const auto n64 = static_cast<std::int64_t>(count);
        std::int64_t s = 0;
        for (const auto& q : quadrant) {
            const std::int64_t d = 4 * static_cast<std::int64_t>(q.size()) - n64;
            s += d * d;
        }
        if (static_cast<double>(s) <
            cfg.chi2_threshold * 4.0 * static_cast<double>(count)) {
            continue;  // uniform enough; cell stays terminal
        }

        const auto first = static_cast<std::int32_t>(partition.cells.size());
        partition.cells[item.cell].first_child = first;
        const std::uint32_t xs[3] = {parent.x_lo, bx, parent.x_hi};
        const std::uint32_t ys[3] = {parent.y_lo, by, parent.y_hi};
        for (int q = 0; q < 4; ++q) {
            const int ix = q & 1, iy = q >> 1;
            partition.cells.push_back({xs[ix], xs[ix + 1], ys[iy], ys[iy + 1],
                                       static_cast<std::uint32_t>(quadrant[q].size()), -1});
            stack.push_back({static_cast<std::uint32_t>(first + q), std::move(quadrant[q])});
        }
    }
    return partition;
}

double partition_mi(const Partition& partition) {
    const double n = static_cast<double>(partition.n_samples);
    std::vector<double> terms;
    for (const auto& cell : partition.cells) {
        if (!cell.terminal() || cell.count == 0) continue;
        const double p = static_cast<double>(cell.count) / n;
        const double area = cell.x_width(partition.n_samples) * cell.y_width(partition.n_samples);
        terms.push_back(p * std::log(p / area));
    }
    // Sorted accumulation: the total depends only on the multiset of terms,
    // which is identical for (x,y) and (y,x).
    std::sort(terms.begin(), terms.end());
    double mi = 0.0;
    for (double t : terms) mi += t;
    return mi;
}

double pearson_correlation(const ScalarSeries& x, const ScalarSeries& y) {
    const std::size_t n = x.size();
    if (n != y.size()) raise(errc::length_mismatch, "series lengths differ");
    if (n < 2) raise(errc::too_few_samples, "pearson needs length >= 2");
    const double* xs = x.values().data();
    const double* ys = y.values().data();
    const double mean_x = kernels::sum(xs, n) / static_cast<double>(n);
    const double mean_y = kernels::sum(ys, n) / static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    kernels::centered_moments(xs, ys, n, mean_x, mean_y, &sxx, &syy, &sxy);
    if (sxx <= 0.0) raise(errc::zero_variance, "x has zero variance");
    if (syy <= 0.0) raise(errc::zero_variance, "y has zero variance");
    const double rho = sxy / std::sqrt(sxx * syy);
    return std::clamp(rho, -1.0, 1.0);
}

double normalized_dependence(double mi_nats) {
    if (mi_nats < 0.0) {
        raise(errc::negative_mi, "expected a clamped MI estimate, got " + std::to_string(mi_nats));
    }
    return std::sqrt(1.0 - std::exp(-2.0 * mi_nats));
}

double gaussian_mi(double rho) {
    if (!(std::abs(rho) < 1.0)) {
        raise(errc::degenerate_correlation, "|rho| must be < 1, got " + std::to_string(rho));
    }
    return -0.5 * std::log(1.0 - rho * rho);
}

DependenceScore mutual_information(const ScalarSeries& x, const ScalarSeries& y,
                                   const MiConfig& cfg) {
    if (x.size() != y.size()) raise(errc::length_mismatch, "series lengths differ");
    const auto x_ranks = rank_indices(x.values());
    const auto y_ranks = rank_indices(y.values());
    const Partition partition = build_partition(x_ranks, y_ranks, cfg);

    DependenceScore score;
    score.raw_mi = partition_mi(partition);
    score.mi_nats = cfg.clamp_negative ? std::max(score.raw_mi, 0.0) : score.raw_mi;
    score.pearson = pearson_correlation(x, y);
    score.delta = normalized_dependence(std::max(score.mi_nats, 0.0));
    return score;
}

}  // namespace relvar::mi
