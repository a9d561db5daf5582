#include "relvar/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "relvar/expr.hpp"
#include "relvar/rng.hpp"

namespace relvar::data {

bool Dataset::has_column(std::string_view name) const noexcept {
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::size_t Dataset::column_index(std::string_view name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) raise(errc::missing_column, std::string(name));
    return static_cast<std::size_t>(it - names.begin());
}

const std::vector<double>& Dataset::column(std::string_view name) const {
    return columns[column_index(name)];
}

const std::vector<std::string>& mapss_regressors() {
    static const std::vector<std::string> names = {
        "AOD0550",     "AOD0470",      "AOD0660",      "mref0470",      "mref0550",
        "surfre0660",  "surfre0470",   "surfre2100",   "cfrac",         "QAavg",
        "SolarZenith", "SolarAzimuth", "SensorZenith", "SensorAzimuth", "ScatteringAngle"};
    return names;
}

// ============================================================================
// CSV
// ============================================================================

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::vector<std::string>& required) {
    std::ifstream in(path);
    if (!in) raise(errc::io_error, "cannot open " + path);

    std::string header;
    if (!std::getline(in, header)) raise(errc::empty_file, path);

    Dataset dataset;
    dataset.source = path;
    for (const auto& raw : split_line(header)) {
        const std::string name = trim(raw);
        if (name.empty()) raise(errc::unparsable_cell, "empty column name in header of " + path);
        if (dataset.has_column(name)) {
            raise(errc::invalid_config, "duplicate column \"" + name + "\" in " + path);
        }
        dataset.names.push_back(name);
    }
    for (const auto& name : required) {
        if (!dataset.has_column(name)) {
            raise(errc::missing_column, name + " (in " + path + ")");
        }
    }

    dataset.columns.resize(dataset.names.size());
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != dataset.names.size()) {
            raise(errc::unparsable_cell, "row " + std::to_string(row) + " of " + path + " has " +
                                             std::to_string(fields.size()) + " fields, expected " +
                                             std::to_string(dataset.names.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string cell = trim(fields[c]);
            char* end = nullptr;
            const double value = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size()) {
                raise(errc::unparsable_cell, "row " + std::to_string(row) + ", column \"" +
                                                 dataset.names[c] + "\": \"" + cell + "\"");
            }
            dataset.columns[c].push_back(value);
        }
    }
    return dataset;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(errc::io_error, "cannot write " + path);
    for (std::size_t c = 0; c < dataset.names.size(); ++c) {
        out << (c ? "," : "") << dataset.names[c];
    }
    out << '\n';
    char buf[40];
    for (std::size_t r = 0; r < dataset.rows(); ++r) {
        for (std::size_t c = 0; c < dataset.columns.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", dataset.columns[c][r]);
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) raise(errc::io_error, "short write to " + path);
}

// ============================================================================
// Cleaning
// ============================================================================

Dataset clean(const Dataset& dataset, const std::vector<double>& fill_values) {
    Dataset out;
    out.names = dataset.names;
    out.source = dataset.source;
    out.columns.resize(dataset.columns.size());

    CleanReport report;
    report.rows_in = dataset.rows();
    for (std::size_t r = 0; r < dataset.rows(); ++r) {
        bool non_finite = false;
        bool fill = false;
        for (const auto& col : dataset.columns) {
            const double v = col[r];
            if (!std::isfinite(v)) {
                non_finite = true;
                break;
            }
            if (std::find(fill_values.begin(), fill_values.end(), v) != fill_values.end()) {
                fill = true;
                break;
            }
        }
        if (non_finite) {
            ++report.dropped_non_finite;
            continue;
        }
        if (fill) {
            ++report.dropped_fill_value;
            continue;
        }
        for (std::size_t c = 0; c < dataset.columns.size(); ++c) {
            out.columns[c].push_back(dataset.columns[c][r]);
        }
    }
    report.rows_out = report.rows_in - report.dropped_non_finite - report.dropped_fill_value;
    if (report.rows_in > 0 && report.rows_out == 0) {
        raise(errc::all_rows_dropped, "every row of " + dataset.source + " was dropped");
    }
    out.cleaning = report;
    return out;
}

// ============================================================================
// Synthetic data
// ============================================================================

Dataset synth_generate(const SynthSpec& spec) {
    if (spec.n_features < 1) raise(errc::invalid_config, "n_features must be >= 1");
    if (spec.n_rows < 1) raise(errc::invalid_config, "n_rows must be >= 1");
    if (spec.noise_sigma < 0.0) raise(errc::invalid_config, "noise_sigma must be >= 0");
    for (int idx : spec.relevant) {
        if (idx < 1 || idx > spec.n_features) {
            raise(errc::invalid_config, "relevant index " + std::to_string(idx) +
                                            " outside 1.." + std::to_string(spec.n_features));
        }
    }
    const auto generator = expr::Expression::parse(spec.generator);
    for (int idx : generator.variables()) {
        if (std::find(spec.relevant.begin(), spec.relevant.end(), idx) == spec.relevant.end()) {
            raise(errc::invalid_config, "generator references x" + std::to_string(idx) +
                                            " which is not in the relevant set");
        }
        if (idx > spec.n_features) {
            raise(errc::invalid_config, "generator references x" + std::to_string(idx) +
                                            " beyond n_features=" + std::to_string(spec.n_features));
        }
    }

    Dataset dataset;
    dataset.source = "synth(seed=" + std::to_string(spec.seed) + ", generator=" + spec.generator +
                     ", rows=" + std::to_string(spec.n_rows) + ")";

    // Feature columns first, then noise: the draw sequence is part of the
    // determinism contract.
    rng::Xoshiro256 gen(rng::derive_stream(spec.seed, 0x53594e5448ULL));
    for (int f = 1; f <= spec.n_features; ++f) {
        dataset.names.push_back("x" + std::to_string(f));
        std::vector<double> col(spec.n_rows);
        for (auto& v : col) v = gen.uniform01();
        dataset.columns.push_back(std::move(col));
    }

    std::vector<double> target(spec.n_rows);
    std::vector<double> row(static_cast<std::size_t>(spec.n_features));
    for (std::size_t r = 0; r < spec.n_rows; ++r) {
        for (int f = 0; f < spec.n_features; ++f) {
            row[static_cast<std::size_t>(f)] = dataset.columns[static_cast<std::size_t>(f)][r];
        }
        const double value = generator.eval(row);
        if (!std::isfinite(value)) {
            raise(errc::invalid_config,
                  "generator produced a non-finite value at row " + std::to_string(r));
        }
        target[r] = value;
    }
    if (spec.noise_sigma > 0.0) {
        for (auto& v : target) v += spec.noise_sigma * gen.normal();
    }
    dataset.names.push_back(spec.target_name);
    dataset.columns.push_back(std::move(target));
    return dataset;
}

// ============================================================================
// Bias histogram
// ============================================================================

Histogram bias_histogram(const Dataset& dataset, const std::string& col_a,
                         const std::string& col_b, int n_bins) {
    if (n_bins < 1) raise(errc::invalid_config, "n_bins must be >= 1");
    const auto& a = dataset.column(col_a);
    const auto& b = dataset.column(col_b);

    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (std::isfinite(d)) diffs.push_back(d);
    }
    if (diffs.empty()) raise(errc::too_few_samples, "no finite differences");

    auto [mn_it, mx_it] = std::minmax_element(diffs.begin(), diffs.end());
    double lo = *mn_it, hi = *mx_it;
    if (lo == hi) {
        // degenerate range: widen so the single value sits inside a real bin
        lo -= 0.5;
        hi += 0.5;
    }

    Histogram hist;
    hist.counts.assign(static_cast<std::size_t>(n_bins), 0);
    hist.bin_edges.resize(static_cast<std::size_t>(n_bins) + 1);
    const double width = (hi - lo) / n_bins;
    for (int e = 0; e <= n_bins; ++e) hist.bin_edges[static_cast<std::size_t>(e)] = lo + width * e;
    hist.bin_edges.back() = hi;

    for (double d : diffs) {
        auto bin = static_cast<long>((d - lo) / width);
        bin = std::clamp(bin, 0L, static_cast<long>(n_bins - 1));  // top edge closes the last bin
        ++hist.counts[static_cast<std::size_t>(bin)];
    }
    return hist;
}

void save_histogram_csv(const Histogram& histogram, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(errc::io_error, "cannot write " + path);
    out << "bin_left_edge,count\n";
    char buf[40];
    for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", histogram.bin_edges[i]);
        out << buf << ',' << histogram.counts[i] << '\n';
    }
}

// ============================================================================
// Hashing
// ============================================================================

namespace {

inline void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

}  // namespace

std::uint64_t dataset_hash(const Dataset& dataset) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const std::uint64_t n_cols = dataset.names.size();
    const std::uint64_t n_rows = dataset.rows();
    fnv_bytes(h, &n_cols, sizeof n_cols);
    fnv_bytes(h, &n_rows, sizeof n_rows);
    for (const auto& name : dataset.names) fnv_bytes(h, name.data(), name.size());
    for (const auto& col : dataset.columns) {
        fnv_bytes(h, col.data(), col.size() * sizeof(double));
    }
    return h;
}

}  // namespace relvar::data
