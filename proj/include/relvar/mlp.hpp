#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relvar/dataset.hpp"
#include "relvar/series.hpp"
#include "relvar/subset.hpp"

namespace relvar::regressor {

// Per-column standardization statistics, computed on the training split only.
struct NormStats {
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    double target_mean = 0.0;
    double target_std = 1.0;
};

// One-hidden-layer feed-forward network with tanh hidden units and a linear
// output: y = w2 . tanh(w1 x + b1) + b2, on standardized inputs/targets.
struct MlpModel {
    int input_dim = 0;
    int hidden_dim = 0;
    std::vector<double> w1;  // hidden_dim x input_dim, row-major
    std::vector<double> b1;  // hidden_dim
    std::vector<double> w2;  // hidden_dim
    double b2 = 0.0;
    NormStats norm;
    std::vector<std::string> feature_names;
    std::string target_name;

    std::size_t parameter_count() const noexcept {
        const auto h = static_cast<std::size_t>(hidden_dim);
        const auto d = static_cast<std::size_t>(input_dim);
        return h * d + 2 * h + 1;
    }
};

struct TrainConfig {
    int hidden_dim = 200;
    std::uint64_t seed = 1;
    double lm_lambda_init = 1e-3;
    double lm_lambda_factor = 10.0;
    int max_epochs = 200;
    int patience = 6;           // accepted steps without val improvement
    double lambda_max = 1e10;

    void validate() const {
        if (hidden_dim < 1) raise(errc::invalid_config, "hidden_dim must be >= 1");
        if (!(lm_lambda_init > 0.0)) raise(errc::invalid_config, "lm_lambda_init must be > 0");
        if (!(lm_lambda_factor > 1.0)) raise(errc::invalid_config, "lm_lambda_factor must be > 1");
        if (max_epochs < 1) raise(errc::invalid_config, "max_epochs must be >= 1");
        if (patience < 1) raise(errc::invalid_config, "patience must be >= 1");
        if (!(lambda_max > 0.0)) raise(errc::invalid_config, "lambda_max must be > 0");
    }
};

enum class StopReason { patience_exhausted, lambda_overflow, max_epochs };

const char* stop_reason_name(StopReason reason) noexcept;
StopReason stop_reason_from_name(const std::string& name);

// One record per attempted LM step. RMS values are in target units.
struct TrainTrace {
    struct Epoch {
        double train_rms;
        double val_rms;
        double lambda;
        bool accepted;
    };
    std::vector<Epoch> epochs;
    StopReason stop_reason = StopReason::max_epochs;
    double best_val_rms = 0.0;
    int best_epoch = 0;  // 0 = the initial weights
};

// Seeded 80/10/10 row split. val and test take floor(N/10) rows each, train
// the remainder. Depends on (seed, n_rows) only, so every feature subset
// trained against the same dataset sees the identical split. Index lists are
// ascending.
struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};
SplitIndices split_rows(std::size_t n_rows, std::uint64_t seed);

// Materialized train/val/test datasets in split order.
std::array<data::Dataset, 3> split_dataset(const data::Dataset& dataset, const TrainConfig& cfg);

// Forward pass for one standardized input; output is de-standardized back to
// target units.
double forward(const MlpModel& model, std::span<const double> x_std);

// d(standardized output)/d(parameter) for one sample; layout matches the
// parameter vector [w1 row-major, b1, w2, b2]. Returns the standardized
// output. Exposed for the finite-difference checks.
double jacobian_row(const MlpModel& model, std::span<const double> x_std, std::span<double> grad);

// Levenberg-Marquardt fit of the network to the target column over the
// training split, with validation-RMS early stopping. Returns the snapshot
// with the best validation RMS seen. Weight initialization draws from a
// stream keyed by (cfg.seed, subset mask), so subsets never share draws.
std::pair<MlpModel, TrainTrace> train_lm(const data::Dataset& dataset,
                                         const std::string& target_col,
                                         const search::FeatureSubset& features,
                                         const TrainConfig& cfg);

// Row-wise forward over a raw (unstandardized) dataset; output order follows
// row order.
mi::ScalarSeries predict(const MlpModel& model, const data::Dataset& dataset);

double rms_error(const mi::ScalarSeries& pred, const mi::ScalarSeries& obs);

// Flat binary model file: versioned header, dims, names, norm stats, then
// row-major weights as little-endian 64-bit floats.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace relvar::regressor
