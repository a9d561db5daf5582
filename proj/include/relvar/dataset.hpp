#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relvar/errors.hpp"

namespace relvar::data {

struct CleanReport {
    std::size_t rows_in = 0;
    std::size_t rows_out = 0;
    std::size_t dropped_non_finite = 0;
    std::size_t dropped_fill_value = 0;
};

// Column-labeled numeric table. Immutable by convention once built: every
// operation returns a new Dataset, and search workers share one instance
// read-only.
struct Dataset {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;  // parallel to names, equal lengths
    std::string source;                        // file path or synth descriptor
    CleanReport cleaning;                      // zeros until clean() has run

    std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
    bool has_column(std::string_view name) const noexcept;
    std::size_t column_index(std::string_view name) const;  // throws missing_column
    const std::vector<double>& column(std::string_view name) const;
};

// The regressor columns of the Aqua-land aerosol product this tool was
// built around, in canonical order. Callers with other data supply their
// own universe.
const std::vector<std::string>& mapss_regressors();
inline constexpr const char* kDefaultTarget = "AERONET_AOD";

// CSV with a mandatory header row, '.' decimal separator. Columns listed in
// `required` must be present; extra columns are kept.
Dataset load_csv(const std::string& path, const std::vector<std::string>& required = {});

// Round-trips through load_csv to full double precision.
void save_csv(const Dataset& dataset, const std::string& path);

// Complete-case filter: drops every row holding a NaN/Inf or one of the
// sentinel fill values in any column. Row order is preserved.
Dataset clean(const Dataset& dataset, const std::vector<double>& fill_values = {-9999.0, -999.0});

struct SynthSpec {
    int n_features = 0;
    std::vector<int> relevant;  // 1-based feature indices feeding the target
    std::string generator;      // expression over x1..xN, see expr.hpp
    double noise_sigma = 0.0;
    std::size_t n_rows = 0;
    std::uint64_t seed = 1;
    std::string target_name = "target";
};

// Features are iid uniform [0,1); target = generator(features) + N(0, sigma^2).
// Deterministic in the seed. The generator may only reference features listed
// as relevant, so everything else is independent of the target by construction.
Dataset synth_generate(const SynthSpec& spec);

struct Histogram {
    std::vector<double> bin_edges;   // ascending, size = counts.size() + 1
    std::vector<std::size_t> counts;
};

// Histogram of (col_a - col_b) over n_bins equal-width bins spanning the
// observed range. Bins are left-closed; the last bin is closed on both sides.
Histogram bias_histogram(const Dataset& dataset, const std::string& col_a,
                         const std::string& col_b, int n_bins);

void save_histogram_csv(const Histogram& histogram, const std::string& path);

// Content hash over names and values; used to pin checkpoints to their data.
std::uint64_t dataset_hash(const Dataset& dataset);

}  // namespace relvar::data
