#include "relvar/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "relvar/kernels.hpp"
#include "relvar/rng.hpp"

namespace relvar::regressor {

const char* stop_reason_name(StopReason reason) noexcept {
    switch (reason) {
        case StopReason::patience_exhausted: return "patience_exhausted";
        case StopReason::lambda_overflow: return "lambda_overflow";
        case StopReason::max_epochs: return "max_epochs";
    }
    return "unknown";
}

StopReason stop_reason_from_name(const std::string& name) {
    if (name == "patience_exhausted") return StopReason::patience_exhausted;
    if (name == "lambda_overflow") return StopReason::lambda_overflow;
    if (name == "max_epochs") return StopReason::max_epochs;
    raise(errc::invalid_config, "unknown stop reason \"" + name + "\"");
}

// ============================================================================
// Row split
// ============================================================================

SplitIndices split_rows(std::size_t n_rows, std::uint64_t seed) {
    if (n_rows < 10) {
        raise(errc::too_few_rows, "need at least 10 rows, got " + std::to_string(n_rows));
    }
    const std::size_t val_n = n_rows / 10;
    const std::size_t test_n = n_rows / 10;
    const std::size_t train_n = n_rows - val_n - test_n;

    std::vector<std::size_t> perm(n_rows);
    std::iota(perm.begin(), perm.end(), 0u);
    rng::Xoshiro256 gen(rng::derive_stream(seed, 0x53504c4954ULL));
    for (std::size_t i = n_rows - 1; i > 0; --i) {
        std::swap(perm[i], perm[gen.below(i + 1)]);
    }

    SplitIndices split;
    split.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train_n));
    split.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(train_n),
                     perm.begin() + static_cast<std::ptrdiff_t>(train_n + val_n));
    split.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(train_n + val_n), perm.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

namespace {

data::Dataset take_rows(const data::Dataset& dataset, const std::vector<std::size_t>& rows) {
    data::Dataset out;
    out.names = dataset.names;
    out.source = dataset.source;
    out.columns.resize(dataset.columns.size());
    for (std::size_t c = 0; c < dataset.columns.size(); ++c) {
        out.columns[c].reserve(rows.size());
        for (std::size_t r : rows) out.columns[c].push_back(dataset.columns[c][r]);
    }
    return out;
}

}  // namespace

std::array<data::Dataset, 3> split_dataset(const data::Dataset& dataset, const TrainConfig& cfg) {
    const SplitIndices split = split_rows(dataset.rows(), cfg.seed);
    return {take_rows(dataset, split.train), take_rows(dataset, split.val),
            take_rows(dataset, split.test)};
}

// ============================================================================
// Forward pass and Jacobian
// ============================================================================

namespace {

// Standardized-scale forward pass; fills the tanh activations.
double forward_std(const MlpModel& model, std::span<const double> x, std::vector<double>& t) {
    const auto h = static_cast<std::size_t>(model.hidden_dim);
    const auto d = static_cast<std::size_t>(model.input_dim);
    t.resize(h);
    for (std::size_t k = 0; k < h; ++k) {
        t[k] = std::tanh(kernels::dot(model.w1.data() + k * d, x.data(), d) + model.b1[k]);
    }
    return kernels::dot(model.w2.data(), t.data(), h) + model.b2;
}

thread_local std::vector<double> tls_hidden;

}  // namespace

double forward(const MlpModel& model, std::span<const double> x_std) {
    if (x_std.size() != static_cast<std::size_t>(model.input_dim)) {
        raise(errc::dimension_mismatch, "input has " + std::to_string(x_std.size()) +
                                            " values, model expects " +
                                            std::to_string(model.input_dim));
    }
    const double y_std = forward_std(model, x_std, tls_hidden);
    return y_std * model.norm.target_std + model.norm.target_mean;
}

double jacobian_row(const MlpModel& model, std::span<const double> x_std, std::span<double> grad) {
    const auto h = static_cast<std::size_t>(model.hidden_dim);
    const auto d = static_cast<std::size_t>(model.input_dim);
    if (x_std.size() != d) raise(errc::dimension_mismatch, "input size mismatch");
    if (grad.size() != model.parameter_count()) {
        raise(errc::dimension_mismatch, "gradient buffer size mismatch");
    }
    std::vector<double>& t = tls_hidden;
    const double y_std = forward_std(model, x_std, t);

    // Parameter layout: [w1 row-major | b1 | w2 | b2]
    for (std::size_t k = 0; k < h; ++k) {
        const double c = model.w2[k] * (1.0 - t[k] * t[k]);
        double* w1_grad = grad.data() + k * d;
        for (std::size_t j = 0; j < d; ++j) w1_grad[j] = c * x_std[j];
        grad[h * d + k] = c;
        grad[h * d + h + k] = t[k];
    }
    grad[h * d + 2 * h] = 1.0;
    return y_std;
}

// ============================================================================
// Levenberg-Marquardt training
// ============================================================================

namespace {

struct ParamView {
    // flat parameter vector <-> model fields
    static void subtract(MlpModel& model, const std::vector<double>& delta) {
        const auto h = static_cast<std::size_t>(model.hidden_dim);
        const auto d = static_cast<std::size_t>(model.input_dim);
        for (std::size_t i = 0; i < h * d; ++i) model.w1[i] -= delta[i];
        for (std::size_t k = 0; k < h; ++k) model.b1[k] -= delta[h * d + k];
        for (std::size_t k = 0; k < h; ++k) model.w2[k] -= delta[h * d + h + k];
        model.b2 -= delta[h * d + 2 * h];
    }
};

// Cholesky solve of (lower-triangular copy of) a symmetric PD system.
// Returns false when a pivot is not strictly positive.
bool cholesky_solve(std::vector<double>& a, std::size_t p, std::vector<double>& x) {
    for (std::size_t j = 0; j < p; ++j) {
        double* row_j = a.data() + j * p;
        const double diag = row_j[j] - kernels::dot(row_j, row_j, j);
        if (!(diag > 0.0) || !std::isfinite(diag)) return false;
        row_j[j] = std::sqrt(diag);
        for (std::size_t i = j + 1; i < p; ++i) {
            double* row_i = a.data() + i * p;
            row_i[j] = (row_i[j] - kernels::dot(row_i, row_j, j)) / row_j[j];
        }
    }
    // L z = x
    for (std::size_t i = 0; i < p; ++i) {
        const double* row_i = a.data() + i * p;
        x[i] = (x[i] - kernels::dot(row_i, x.data(), i)) / row_i[i];
    }
    // L^T out = z
    for (std::size_t ii = p; ii-- > 0;) {
        double v = x[ii];
        for (std::size_t k = ii + 1; k < p; ++k) v -= a[k * p + ii] * x[k];
        x[ii] = v / a[ii * p + ii];
    }
    return true;
}

struct DesignMatrix {
    std::vector<double> x;  // rows x dim, standardized
    std::vector<double> y;  // standardized target
    std::size_t rows = 0;
    std::size_t dim = 0;

    std::span<const double> row(std::size_t r) const { return {x.data() + r * dim, dim}; }
};

DesignMatrix standardize(const data::Dataset& dataset, const std::vector<std::size_t>& cols,
                         std::size_t target_col, const std::vector<std::size_t>& rows,
                         const NormStats& norm) {
    DesignMatrix m;
    m.rows = rows.size();
    m.dim = cols.size();
    m.x.resize(m.rows * m.dim);
    m.y.resize(m.rows);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t src = rows[r];
        for (std::size_t c = 0; c < cols.size(); ++c) {
            m.x[r * m.dim + c] =
                (dataset.columns[cols[c]][src] - norm.feature_mean[c]) / norm.feature_std[c];
        }
        m.y[r] = (dataset.columns[target_col][src] - norm.target_mean) / norm.target_std;
    }
    return m;
}

double mean_of(const std::vector<double>& col, const std::vector<std::size_t>& rows) {
    double acc = 0.0;
    for (std::size_t r : rows) acc += col[r];
    return acc / static_cast<double>(rows.size());
}

double pop_std_of(const std::vector<double>& col, const std::vector<std::size_t>& rows,
                  double mean) {
    double acc = 0.0;
    for (std::size_t r : rows) {
        const double c = col[r] - mean;
        acc += c * c;
    }
    return std::sqrt(acc / static_cast<double>(rows.size()));
}

// Sum of squared standardized residuals.
double sse_of(const MlpModel& model, const DesignMatrix& m) {
    double acc = 0.0;
    std::vector<double>& t = tls_hidden;
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double res = forward_std(model, m.row(r), t) - m.y[r];
        acc += res * res;
    }
    return acc;
}

}  // namespace

std::pair<MlpModel, TrainTrace> train_lm(const data::Dataset& dataset,
                                         const std::string& target_col,
                                         const search::FeatureSubset& features,
                                         const TrainConfig& cfg) {
    cfg.validate();
    if (features.mask == 0) raise(errc::invalid_config, "feature subset is empty");

    const std::vector<std::string> feature_names = features.column_names();
    std::vector<std::size_t> cols;
    for (const auto& name : feature_names) {
        if (name == target_col) {
            raise(errc::invalid_config, "feature \"" + name + "\" is the target column");
        }
        cols.push_back(dataset.column_index(name));
    }
    const std::size_t target_index = dataset.column_index(target_col);
    const SplitIndices split = split_rows(dataset.rows(), cfg.seed);

    // Standardization statistics from the training split only.
    NormStats norm;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const double mean = mean_of(dataset.columns[cols[c]], split.train);
        const double sd = pop_std_of(dataset.columns[cols[c]], split.train, mean);
        if (!(sd > 0.0)) {
            raise(errc::zero_variance,
                  "feature \"" + feature_names[c] + "\" is constant on the training split");
        }
        norm.feature_mean.push_back(mean);
        norm.feature_std.push_back(sd);
    }
    norm.target_mean = mean_of(dataset.columns[target_index], split.train);
    norm.target_std = pop_std_of(dataset.columns[target_index], split.train, norm.target_mean);
    if (!(norm.target_std > 0.0)) {
        raise(errc::zero_variance, "target \"" + target_col + "\" is constant on the training split");
    }

    const DesignMatrix train = standardize(dataset, cols, target_index, split.train, norm);
    const DesignMatrix val = standardize(dataset, cols, target_index, split.val, norm);

    // Initial weights: uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn
    // from a stream keyed by (seed, subset mask). Draw order is part of the
    // reproducibility contract: w1 row-major, b1, w2, b2.
    MlpModel model;
    model.input_dim = static_cast<int>(cols.size());
    model.hidden_dim = cfg.hidden_dim;
    model.norm = norm;
    model.feature_names = feature_names;
    model.target_name = target_col;
    const auto h = static_cast<std::size_t>(cfg.hidden_dim);
    const auto d = cols.size();
    rng::Xoshiro256 gen(rng::derive_stream(cfg.seed, features.mask));
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(h));
    model.w1.resize(h * d);
    model.b1.resize(h);
    model.w2.resize(h);
    for (auto& w : model.w1) w = gen.uniform(-bound1, bound1);
    for (auto& w : model.b1) w = gen.uniform(-bound1, bound1);
    for (auto& w : model.w2) w = gen.uniform(-bound2, bound2);
    model.b2 = gen.uniform(-bound2, bound2);

    const std::size_t n_params = model.parameter_count();
    const double n_train = static_cast<double>(train.rows);
    const double n_val = static_cast<double>(val.rows);
    const double tstd = norm.target_std;

    std::vector<double> normal(n_params * n_params);  // J^T J, upper triangle
    std::vector<double> rhs(n_params);                // J^T r
    std::vector<double> grad(n_params);
    std::vector<double> work(n_params * n_params);
    std::vector<double> delta(n_params);

    // Builds the normal equations at the current weights; returns train SSE.
    const auto build_normal_equations = [&](const MlpModel& at) {
        std::fill(normal.begin(), normal.end(), 0.0);
        std::fill(rhs.begin(), rhs.end(), 0.0);
        double sse = 0.0;
        for (std::size_t r = 0; r < train.rows; ++r) {
            const double res = jacobian_row(at, train.row(r), grad) - train.y[r];
            kernels::syr_upper(normal.data(), n_params, 1.0, grad.data());
            kernels::axpy(rhs.data(), res, grad.data(), n_params);
            sse += res * res;
        }
        return sse;
    };

    double train_mse = build_normal_equations(model) / n_train;
    if (!std::isfinite(train_mse)) raise(errc::non_finite_loss, "initial training loss not finite");
    double val_rms = std::sqrt(sse_of(model, val) / n_val) * tstd;

    TrainTrace trace;
    MlpModel best = model;
    trace.best_val_rms = val_rms;
    trace.best_epoch = 0;
    trace.stop_reason = StopReason::max_epochs;

    double lambda = cfg.lm_lambda_init;
    int since_improvement = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double lambda_used = lambda;

        // work <- lower-triangular mirror of the upper-stored normal matrix,
        // with lambda added on the diagonal
        for (std::size_t i = 0; i < n_params; ++i) {
            for (std::size_t j = 0; j <= i; ++j) work[i * n_params + j] = normal[j * n_params + i];
            work[i * n_params + i] += lambda;
        }
        delta = rhs;
        const bool solved = cholesky_solve(work, n_params, delta);

        bool accepted = false;
        if (solved) {
            MlpModel candidate = model;
            ParamView::subtract(candidate, delta);
            const double cand_mse = sse_of(candidate, train) / n_train;
            if (std::isfinite(cand_mse) && cand_mse < train_mse) {
                model = std::move(candidate);
                train_mse = cand_mse;
                lambda /= cfg.lm_lambda_factor;
                accepted = true;
            }
        }

        if (accepted) {
            val_rms = std::sqrt(sse_of(model, val) / n_val) * tstd;
            if (val_rms < trace.best_val_rms) {
                trace.best_val_rms = val_rms;
                trace.best_epoch = epoch;
                best = model;
                since_improvement = 0;
            } else {
                ++since_improvement;
            }
            trace.epochs.push_back({std::sqrt(train_mse) * tstd, val_rms, lambda_used, true});
            if (since_improvement >= cfg.patience) {
                trace.stop_reason = StopReason::patience_exhausted;
                break;
            }
            train_mse = build_normal_equations(model) / n_train;
        } else {
            lambda *= cfg.lm_lambda_factor;
            trace.epochs.push_back({std::sqrt(train_mse) * tstd, val_rms, lambda_used, false});
            if (lambda > cfg.lambda_max) {
                if (!solved) {
                    raise(errc::singular_normal_equations,
                          "normal equations singular at lambda_max");
                }
                trace.stop_reason = StopReason::lambda_overflow;
                break;
            }
        }
    }

    return {std::move(best), std::move(trace)};
}

// ============================================================================
// Prediction and error
// ============================================================================

mi::ScalarSeries predict(const MlpModel& model, const data::Dataset& dataset) {
    std::vector<std::size_t> cols;
    for (const auto& name : model.feature_names) cols.push_back(dataset.column_index(name));
    if (cols.size() != static_cast<std::size_t>(model.input_dim)) {
        raise(errc::dimension_mismatch, "model/feature count mismatch");
    }
    std::vector<double> x(cols.size());
    std::vector<double> out;
    out.reserve(dataset.rows());
    std::vector<double>& t = tls_hidden;
    for (std::size_t r = 0; r < dataset.rows(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            x[c] = (dataset.columns[cols[c]][r] - model.norm.feature_mean[c]) /
                   model.norm.feature_std[c];
        }
        out.push_back(forward_std(model, x, t) * model.norm.target_std + model.norm.target_mean);
    }
    return mi::ScalarSeries(std::move(out));
}

double rms_error(const mi::ScalarSeries& pred, const mi::ScalarSeries& obs) {
    if (pred.size() != obs.size()) raise(errc::length_mismatch, "series lengths differ");
    if (pred.size() == 0) raise(errc::too_few_samples, "empty series");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - obs[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

// ============================================================================
// Model file
// ============================================================================

namespace {

constexpr char kMagic[8] = {'R', 'E', 'L', 'V', 'A', 'R', 'M', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string get_string(std::istream& in) {
    const std::uint32_t n = get_u32(in);
    if (n > (1u << 20)) raise(errc::io_error, "model file: implausible string length");
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}

}  // namespace

void save_model(const MlpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot write " + path);
    out.write(kMagic, sizeof kMagic);
    put_u32(out, static_cast<std::uint32_t>(model.input_dim));
    put_u32(out, static_cast<std::uint32_t>(model.hidden_dim));
    for (const auto& name : model.feature_names) put_string(out, name);
    put_string(out, model.target_name);
    for (double v : model.norm.feature_mean) put_f64(out, v);
    for (double v : model.norm.feature_std) put_f64(out, v);
    put_f64(out, model.norm.target_mean);
    put_f64(out, model.norm.target_std);
    for (double v : model.w1) put_f64(out, v);
    for (double v : model.b1) put_f64(out, v);
    for (double v : model.w2) put_f64(out, v);
    put_f64(out, model.b2);
    if (!out) raise(errc::io_error, "short write to " + path);
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        raise(errc::io_error, path + " is not a relvar model file");
    }
    MlpModel model;
    model.input_dim = static_cast<int>(get_u32(in));
    model.hidden_dim = static_cast<int>(get_u32(in));
    if (model.input_dim < 1 || model.hidden_dim < 1 || model.input_dim > (1 << 20) ||
        model.hidden_dim > (1 << 20)) {
        raise(errc::io_error, path + ": implausible dimensions");
    }
    const auto h = static_cast<std::size_t>(model.hidden_dim);
    const auto d = static_cast<std::size_t>(model.input_dim);
    for (std::size_t c = 0; c < d; ++c) model.feature_names.push_back(get_string(in));
    model.target_name = get_string(in);
    model.norm.feature_mean.resize(d);
    model.norm.feature_std.resize(d);
    for (auto& v : model.norm.feature_mean) v = get_f64(in);
    for (auto& v : model.norm.feature_std) v = get_f64(in);
    model.norm.target_mean = get_f64(in);
    model.norm.target_std = get_f64(in);
    model.w1.resize(h * d);
    model.b1.resize(h);
    model.w2.resize(h);
    for (auto& v : model.w1) v = get_f64(in);
    for (auto& v : model.b1) v = get_f64(in);
    for (auto& v : model.w2) v = get_f64(in);
    model.b2 = get_f64(in);
    if (!in) raise(errc::io_error, path + " is truncated");

    for (double sd : model.norm.feature_std) {
        if (!(sd > 0.0)) raise(errc::io_error, path + ": non-positive feature stddev");
    }
    if (!(model.norm.target_std > 0.0)) raise(errc::io_error, path + ": non-positive target stddev");
    const auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(model.w1) || !finite(model.b1) || !finite(model.w2) ||
        !std::isfinite(model.b2)) {
        raise(errc::io_error, path + ": non-finite weights");
    }
    return model;
}

}  // namespace relvar::regressor
