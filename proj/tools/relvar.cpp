// relvar command-line tool: dependence estimation, single training runs,
// brute-force relevant-variable searches, synthetic data, bias histograms.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relvar/dataset.hpp"
#include "relvar/mi.hpp"
#include "relvar/mlp.hpp"
#include "relvar/search.hpp"
#include "relvar/version.hpp"

namespace {

using namespace relvar;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;     // configuration, I/O, or schema problems
constexpr int kExitDegraded = 3;  // search finished but most jobs failed

std::vector<double> parse_fill_values(const std::string& text) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (item.empty() || end != item.c_str() + item.size()) {
            raise(errc::invalid_config, "bad fill value \"" + item + "\"");
        }
        values.push_back(v);
    }
    return values;
}

std::vector<std::string> parse_name_list(const std::string& text) {
    std::vector<std::string> names;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (!item.empty()) names.push_back(item);
    }
    return names;
}

// Resolve an output path against --output-dir (or RELVAR_OUTPUT_DIR).
std::string resolve_output(const std::string& dir, const std::string& path) {
    if (dir.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / p).string();
}

std::vector<std::string> resolve_universe(const data::Dataset& dataset, const std::string& features,
                                          const std::string& target) {
    std::vector<std::string> names;
    if (features == "all") {
        for (const auto& name : dataset.names) {
            if (name != target) names.push_back(name);
        }
    } else {
        names = parse_name_list(features);
        for (const auto& name : names) dataset.column_index(name);  // validate
    }
    if (names.empty()) raise(errc::empty_universe, "no candidate feature columns");
    return names;
}

// ---------------------------------------------------------------------------
// mi
// ---------------------------------------------------------------------------

struct MiArgs {
    std::string input, col_x, col_y;
    std::string fill_values = "-9999,-999";
    mi::MiConfig cfg;
};

int cmd_mi(const MiArgs& args) {
    args.cfg.validate();
    const data::Dataset raw = data::load_csv(args.input, {args.col_x, args.col_y});
    const data::Dataset cleaned = data::clean(raw, parse_fill_values(args.fill_values));
    const auto score = mi::mutual_information(mi::ScalarSeries(cleaned.column(args.col_x)),
                                              mi::ScalarSeries(cleaned.column(args.col_y)),
                                              args.cfg);
    std::printf("rows:    %zu (from %zu before cleaning)\n", cleaned.rows(), raw.rows());
    std::printf("mi_nats: %.6f\n", score.mi_nats);
    std::printf("raw_mi:  %.6f\n", score.raw_mi);
    std::printf("pearson: %.6f\n", score.pearson);
    std::printf("delta:   %.6f\n", score.delta);
    std::printf("RELVAR_MI mi_nats=%.17g raw_mi=%.17g pearson=%.17g delta=%.17g\n", score.mi_nats,
                score.raw_mi, score.pearson, score.delta);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string input, target = data::kDefaultTarget;
    std::string features = "all";
    std::string fill_values = "-9999,-999";
    std::string output = "model.rvm";
    std::string trace;
    std::string output_dir;
    regressor::TrainConfig cfg;
};

int cmd_train(const TrainArgs& args) {
    args.cfg.validate();
    const data::Dataset dataset =
        data::clean(data::load_csv(args.input, {args.target}), parse_fill_values(args.fill_values));

    auto universe = std::make_shared<const std::vector<std::string>>(
        resolve_universe(dataset, args.features, args.target));
    if (universe->size() > 64) raise(errc::universe_too_large, "more than 64 features");
    search::FeatureSubset subset{universe, universe->size() == 64
                                               ? ~0ull
                                               : (1ull << universe->size()) - 1};

    auto [model, trace] = regressor::train_lm(dataset, args.target, subset, args.cfg);

    const std::string model_path = resolve_output(args.output_dir, args.output);
    regressor::save_model(model, model_path);
    const std::string trace_path =
        resolve_output(args.output_dir, args.trace.empty() ? args.output + ".trace.csv" : args.trace);
    {
        std::ofstream out(trace_path);
        if (!out) raise(errc::io_error, "cannot write " + trace_path);
        out << "epoch,train_rms,val_rms,lambda,accepted\n";
        char buf[128];
        for (std::size_t e = 0; e < trace.epochs.size(); ++e) {
            const auto& ep = trace.epochs[e];
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%d\n", e + 1, ep.train_rms,
                          ep.val_rms, ep.lambda, ep.accepted ? 1 : 0);
            out << buf;
        }
    }

    // Held-out error of the returned snapshot.
    const auto split = regressor::split_rows(dataset.rows(), args.cfg.seed);
    const mi::ScalarSeries all_pred = regressor::predict(model, dataset);
    const auto& target_col = dataset.column(args.target);
    std::vector<double> pred_test, obs_test;
    for (std::size_t r : split.test) {
        pred_test.push_back(all_pred[r]);
        obs_test.push_back(target_col[r]);
    }
    const double test_rms = regressor::rms_error(mi::ScalarSeries(std::move(pred_test)),
                                                 mi::ScalarSeries(std::move(obs_test)));

    std::printf("model:        %s\n", model_path.c_str());
    std::printf("trace:        %s\n", trace_path.c_str());
    std::printf("epochs:       %zu\n", trace.epochs.size());
    std::printf("stop_reason:  %s\n", regressor::stop_reason_name(trace.stop_reason));
    std::printf("best_val_rms: %.6f\n", trace.best_val_rms);
    std::printf("test_rms:     %.6f\n", test_rms);
    std::printf("RELVAR_TRAIN test_rms=%.17g best_val_rms=%.17g epochs=%zu stop_reason=%s\n",
                test_rms, trace.best_val_rms, trace.epochs.size(),
                regressor::stop_reason_name(trace.stop_reason));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

struct SearchArgs {
    std::string input, target = data::kDefaultTarget;
    std::string features = "all";
    std::string fill_values = "-9999,-999";
    std::string output = "ranking.tsv";
    std::string checkpoint;
    std::string output_dir;
    std::string eval_scope = "all";
    int top_n = 15;
    bool resume = false;
    bool restart = false;
    bool dry_run = false;
    search::SearchConfig cfg;
};

int cmd_search(const SearchArgs& args) {
    args.cfg.train.validate();
    args.cfg.mi_cfg.validate();
    search::eval_scope_from_name(args.eval_scope);
    const data::Dataset dataset =
        data::clean(data::load_csv(args.input, {args.target}), parse_fill_values(args.fill_values));

    auto universe = std::make_shared<const std::vector<std::string>>(
        resolve_universe(dataset, args.features, args.target));

    search::SearchConfig cfg = args.cfg;
    cfg.eval_scope = search::eval_scope_from_name(args.eval_scope);
    if (cfg.max_size == 0) cfg.max_size = static_cast<int>(universe->size());

    if (args.dry_run) {
        const auto subsets = search::enumerate_subsets(universe, cfg.min_size, cfg.max_size);
        std::printf("RELVAR_SEARCH_DRY jobs=%zu universe=%zu min_size=%d max_size=%d\n",
                    subsets.size(), universe->size(), cfg.min_size, cfg.max_size);
        return kExitOk;
    }

    const std::string ranking_path = resolve_output(args.output_dir, args.output);
    const std::string checkpoint_path = resolve_output(
        args.output_dir, args.checkpoint.empty() ? args.output + ".ckpt" : args.checkpoint);

    if (std::filesystem::exists(checkpoint_path)) {
        if (args.restart) {
            std::filesystem::remove(checkpoint_path);
        } else if (!args.resume) {
            raise(errc::invalid_config, checkpoint_path +
                                            " already exists; pass --resume to continue that "
                                            "search or --restart to discard it");
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto last_print = t0;
    const auto progress = [&](std::size_t done, std::size_t total) {
        const auto now = std::chrono::steady_clock::now();
        if (done != total && now - last_print < std::chrono::seconds(1)) return;
        last_print = now;
        const double elapsed = std::chrono::duration<double>(now - t0).count();
        const double eta = done > 0 ? elapsed * static_cast<double>(total - done) /
                                          static_cast<double>(done)
                                    : 0.0;
        std::fprintf(stderr, "\rrelvar: jobs %zu/%zu elapsed %.0fs eta %.0fs   ", done, total,
                     elapsed, eta);
    };

    const search::SearchOutcome outcome = search::run_search(
        dataset, args.target, universe, cfg, checkpoint_path, args.resume && !args.restart,
        progress);
    std::fputc('\n', stderr);

    if (outcome.budget_exhausted) {
        std::printf("RELVAR_SEARCH_PARTIAL done=%zu total=%zu checkpoint=%s\n",
                    outcome.resumed + outcome.evaluated, outcome.total_jobs,
                    checkpoint_path.c_str());
        std::printf("job budget reached; rerun with --resume to finish the search\n");
        return kExitOk;
    }

    search::write_ranking(outcome.table, ranking_path);
    std::fputs(search::report_table(outcome.table, args.top_n).c_str(), stdout);
    std::printf("RELVAR_SEARCH jobs=%zu failed=%zu resumed=%zu output=%s\n", outcome.total_jobs,
                outcome.failed, outcome.resumed, ranking_path.c_str());

    if (outcome.failed * 2 > outcome.total_jobs) {
        std::fprintf(stderr, "relvar: %zu of %zu jobs failed\n", outcome.failed,
                     outcome.total_jobs);
        return kExitDegraded;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    data::SynthSpec spec;
    std::string relevant;
    std::string output = "synth.csv";
    std::string output_dir;
};

int cmd_synth(const SynthArgs& args) {
    data::SynthSpec spec = args.spec;
    for (const auto& item : parse_name_list(args.relevant)) {
        spec.relevant.push_back(std::atoi(item.c_str()));
    }
    const data::Dataset dataset = data::synth_generate(spec);
    const std::string path = resolve_output(args.output_dir, args.output);
    data::save_csv(dataset, path);
    std::printf("RELVAR_SYNTH rows=%zu features=%d output=%s\n", dataset.rows(), spec.n_features,
                path.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bias-hist
// ---------------------------------------------------------------------------

struct BiasHistArgs {
    std::string input, col_a, col_b;
    std::string fill_values = "-9999,-999";
    std::string output = "bias_hist.csv";
    std::string output_dir;
    int bins = 60;
};

int cmd_bias_hist(const BiasHistArgs& args) {
    const data::Dataset dataset =
        data::clean(data::load_csv(args.input, {args.col_a, args.col_b}),
                    parse_fill_values(args.fill_values));
    const data::Histogram hist = data::bias_histogram(dataset, args.col_a, args.col_b, args.bins);
    const std::string path = resolve_output(args.output_dir, args.output);
    data::save_histogram_csv(hist, path);
    std::size_t total = 0;
    for (auto c : hist.counts) total += c;
    std::printf("RELVAR_BIAS_HIST bins=%d count=%zu output=%s\n", args.bins, total, path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relvar: find the most relevant regressor subset by brute-force NN "
                 "training scored with mutual information"};
    app.require_subcommand(1);
    app.set_version_flag("--version", relvar::kVersion);
    app.set_config("--config", "", "read option defaults from an INI file (flags win)");

    MiArgs mi_args;
    auto* mi_cmd = app.add_subcommand("mi", "mutual information / correlation between two columns");
    mi_cmd->add_option("--input", mi_args.input, "input CSV")->required();
    mi_cmd->add_option("--col-x", mi_args.col_x, "first column")->required();
    mi_cmd->add_option("--col-y", mi_args.col_y, "second column")->required();
    mi_cmd->add_option("--chi2", mi_args.cfg.chi2_threshold, "split threshold (chi-square, 3 dof)");
    mi_cmd->add_option("--min-cell", mi_args.cfg.min_cell_count, "minimum points per cell");
    mi_cmd->add_option("--fill-values", mi_args.fill_values, "sentinel values to drop");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train one network on a feature set");
    train_cmd->add_option("--input", train_args.input, "input CSV")->required();
    train_cmd->add_option("--target", train_args.target, "target column");
    train_cmd->add_option("--features", train_args.features, "comma list of columns, or \"all\"");
    train_cmd->add_option("--hidden", train_args.cfg.hidden_dim, "hidden layer width");
    train_cmd->add_option("--seed", train_args.cfg.seed, "PRNG seed");
    train_cmd->add_option("--max-epochs", train_args.cfg.max_epochs, "LM step limit");
    train_cmd->add_option("--patience", train_args.cfg.patience, "val-RMS early stopping patience");
    train_cmd->add_option("--fill-values", train_args.fill_values, "sentinel values to drop");
    train_cmd->add_option("--output", train_args.output, "model file path");
    train_cmd->add_option("--trace", train_args.trace, "trace CSV path");
    train_cmd->add_option("--output-dir", train_args.output_dir, "directory for outputs")
        ->envname("RELVAR_OUTPUT_DIR");

    SearchArgs search_args;
    auto* search_cmd = app.add_subcommand("search", "brute-force subset search");
    search_cmd->add_option("--input", search_args.input, "input CSV")->required();
    search_cmd->add_option("--target", search_args.target, "target column");
    search_cmd->add_option("--features", search_args.features,
                           "universe: comma list of columns, or \"all\"");
    search_cmd->add_option("--min-size", search_args.cfg.min_size, "smallest subset size");
    search_cmd->add_option("--max-size", search_args.cfg.max_size, "largest subset size (0 = all)");
    search_cmd->add_option("--hidden", search_args.cfg.train.hidden_dim, "hidden layer width");
    search_cmd->add_option("--seed", search_args.cfg.train.seed, "PRNG seed");
    search_cmd->add_option("--max-epochs", search_args.cfg.train.max_epochs, "LM step limit");
    search_cmd->add_option("--patience", search_args.cfg.train.patience, "early stopping patience");
    search_cmd->add_option("--workers", search_args.cfg.workers, "concurrent trainings")
        ->envname("RELVAR_WORKERS");
    search_cmd->add_option("--eval-scope", search_args.eval_scope, "score rows: all | test");
    search_cmd->add_option("--chi2", search_args.cfg.mi_cfg.chi2_threshold, "MI split threshold");
    search_cmd->add_option("--min-cell", search_args.cfg.mi_cfg.min_cell_count,
                           "MI minimum points per cell");
    search_cmd->add_option("--top", search_args.top_n, "rows to print");
    search_cmd->add_option("--fill-values", search_args.fill_values, "sentinel values to drop");
    search_cmd->add_option("--output", search_args.output, "final ranking path");
    search_cmd->add_option("--checkpoint", search_args.checkpoint,
                           "checkpoint path (default <output>.ckpt)");
    search_cmd->add_option("--output-dir", search_args.output_dir, "directory for outputs")
        ->envname("RELVAR_OUTPUT_DIR");
    search_cmd->add_option("--max-jobs", search_args.cfg.max_jobs,
                           "job budget for this run (0 = no limit)");
    search_cmd->add_flag("--resume", search_args.resume, "continue from the checkpoint");
    search_cmd->add_flag("--restart", search_args.restart, "discard any existing checkpoint");
    search_cmd->add_flag("--dry-run", search_args.dry_run, "enumerate jobs only, no training");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth_cmd->add_option("--rows", synth_args.spec.n_rows, "row count")->required();
    synth_cmd->add_option("--features", synth_args.spec.n_features, "feature count")->required();
    synth_cmd->add_option("--relevant", synth_args.relevant, "1-based relevant indices")
        ->required();
    synth_cmd->add_option("--generator", synth_args.spec.generator,
                          "target expression over x1..xN")
        ->required();
    synth_cmd->add_option("--noise-sigma", synth_args.spec.noise_sigma, "Gaussian noise stddev");
    synth_cmd->add_option("--seed", synth_args.spec.seed, "PRNG seed");
    synth_cmd->add_option("--target-name", synth_args.spec.target_name, "target column name");
    synth_cmd->add_option("--output", synth_args.output, "output CSV path");
    synth_cmd->add_option("--output-dir", synth_args.output_dir, "directory for outputs")
        ->envname("RELVAR_OUTPUT_DIR");

    BiasHistArgs bias_args;
    auto* bias_cmd = app.add_subcommand("bias-hist", "histogram of col_a - col_b");
    bias_cmd->add_option("--input", bias_args.input, "input CSV")->required();
    bias_cmd->add_option("--col-a", bias_args.col_a, "minuend column")->required();
    bias_cmd->add_option("--col-b", bias_args.col_b, "subtrahend column")->required();
    bias_cmd->add_option("--bins", bias_args.bins, "bin count");
    bias_cmd->add_option("--fill-values", bias_args.fill_values, "sentinel values to drop");
    bias_cmd->add_option("--output", bias_args.output, "output CSV path");
    bias_cmd->add_option("--output-dir", bias_args.output_dir, "directory for outputs")
        ->envname("RELVAR_OUTPUT_DIR");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (mi_cmd->parsed()) return cmd_mi(mi_args);
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (search_cmd->parsed()) return cmd_search(search_args);
        if (synth_cmd->parsed()) return cmd_synth(synth_args);
        if (bias_cmd->parsed()) return cmd_bias_hist(bias_args);
    } catch (const relvar::error& e) {
        std::fprintf(stderr, "relvar: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "relvar: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
