#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relvar/dataset.hpp"
#include "relvar/mi.hpp"
#include "relvar/mlp.hpp"
#include "relvar/subset.hpp"

namespace relvar::search {

// Which rows the dependence score is computed over. all_rows reproduces the
// full-distribution comparison; test_split avoids the optimistic bias of
// scoring rows the network trained on.
enum class EvalScope { all_rows, test_split };

const char* eval_scope_name(EvalScope scope) noexcept;
EvalScope eval_scope_from_name(const std::string& name);

struct SearchConfig {
    regressor::TrainConfig train;
    mi::MiConfig mi_cfg;
    EvalScope eval_scope = EvalScope::all_rows;
    int min_size = 1;
    int max_size = 0;  // 0 = universe size
    int workers = 1;
    std::uint64_t max_jobs = 0;  // 0 = no budget; otherwise stop after this many completions
};

struct SearchResult {
    FeatureSubset subset;
    mi::DependenceScore score;
    double test_rms = 0.0;
    int epochs = 0;
    regressor::StopReason stop_reason = regressor::StopReason::max_epochs;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string fail_reason;
};

// Identifies the search a results file belongs to. Resume refuses to mix
// manifests.
struct Manifest {
    std::uint64_t dataset_hash = 0;
    std::uint64_t seed = 0;
    std::string target;
    std::vector<std::string> universe;
    int hidden_dim = 0;
    EvalScope eval_scope = EvalScope::all_rows;
    int min_size = 1;
    int max_size = 0;
    double chi2_threshold = 0.0;
    int min_cell_count = 0;
    std::string version;

    bool compatible_with(const Manifest& other) const noexcept;
};

// Results sorted by mi_nats descending, ties by pearson descending then
// canonical subset string ascending; failed jobs sort last.
struct RankingTable {
    std::vector<SearchResult> results;
    Manifest manifest;
};

Manifest make_manifest(const data::Dataset& dataset, const std::string& target,
                       const std::vector<std::string>& universe, const SearchConfig& cfg);

// Establishes the RankingTable order on a result list.
void sort_ranking(std::vector<SearchResult>& results);

// Train -> predict -> score for one subset. Training failures are captured
// in the result rather than thrown, so one bad job cannot sink a search.
SearchResult evaluate_subset(const FeatureSubset& subset, const data::Dataset& dataset,
                             const std::string& target_col, const SearchConfig& cfg);

struct SearchOutcome {
    RankingTable table;
    std::size_t total_jobs = 0;
    std::size_t evaluated = 0;   // jobs run in this process
    std::size_t resumed = 0;     // jobs taken from the checkpoint
    std::size_t failed = 0;
    bool budget_exhausted = false;  // stopped early by cfg.max_jobs
};

// Evaluates every enumerated subset once, streaming each completed job to
// the checkpoint file so an interrupted search resumes where it left off.
// The final table is a pure function of (dataset, cfg); worker count and
// interruptions cannot change it.
SearchOutcome run_search(const data::Dataset& dataset, const std::string& target_col,
                         std::shared_ptr<const std::vector<std::string>> universe,
                         const SearchConfig& cfg, const std::string& checkpoint_path,
                         bool resume,
                         const std::function<void(std::size_t, std::size_t)>& progress = {});

// Three-column text table (subset | MI | rho) of the top_n ranked rows.
std::string report_table(const RankingTable& table, int top_n);

// Sorted results in the checkpoint record format. Volatile fields
// (wall-clock times) are written as "-" so identical searches produce
// byte-identical files.
void write_ranking(const RankingTable& table, const std::string& path);

// Checkpoint file access, exposed for tests.
std::string checkpoint_header(const Manifest& manifest);
std::string checkpoint_record(const SearchResult& result, bool include_wall_time);
struct CheckpointData {
    Manifest manifest;
    std::vector<SearchResult> results;
};
std::optional<CheckpointData> read_checkpoint(
    const std::string& path, std::shared_ptr<const std::vector<std::string>> universe);

}  // namespace relvar::search
