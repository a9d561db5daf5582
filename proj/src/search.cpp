#include "relvar/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "relvar/version.hpp"

namespace relvar::search {

const char* eval_scope_name(EvalScope scope) noexcept {
    return scope == EvalScope::all_rows ? "all" : "test";
}

EvalScope eval_scope_from_name(const std::string& name) {
    if (name == "all") return EvalScope::all_rows;
    if (name == "test") return EvalScope::test_split;
    raise(errc::invalid_config, "eval scope must be \"all\" or \"test\", got \"" + name + "\"");
}

bool Manifest::compatible_with(const Manifest& other) const noexcept {
    return dataset_hash == other.dataset_hash && seed == other.seed && target == other.target &&
           universe == other.universe && hidden_dim == other.hidden_dim &&
           eval_scope == other.eval_scope && min_size == other.min_size &&
           max_size == other.max_size && chi2_threshold == other.chi2_threshold &&
           min_cell_count == other.min_cell_count;
}

Manifest make_manifest(const data::Dataset& dataset, const std::string& target,
                       const std::vector<std::string>& universe, const SearchConfig& cfg) {
    Manifest m;
    m.dataset_hash = data::dataset_hash(dataset);
    m.seed = cfg.train.seed;
    m.target = target;
    m.universe = universe;
    m.hidden_dim = cfg.train.hidden_dim;
    m.eval_scope = cfg.eval_scope;
    m.min_size = cfg.min_size;
    m.max_size = cfg.max_size == 0 ? static_cast<int>(universe.size()) : cfg.max_size;
    m.chi2_threshold = cfg.mi_cfg.chi2_threshold;
    m.min_cell_count = cfg.mi_cfg.min_cell_count;
    m.version = kVersion;
    return m;
}

// ============================================================================
// Single job
// ============================================================================

SearchResult evaluate_subset(const FeatureSubset& subset, const data::Dataset& dataset,
                             const std::string& target_col, const SearchConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    SearchResult result;
    result.subset = subset;
    try {
        auto [model, trace] = regressor::train_lm(dataset, target_col, subset, cfg.train);
        const auto split = regressor::split_rows(dataset.rows(), cfg.train.seed);
        const mi::ScalarSeries all_pred = regressor::predict(model, dataset);
        const auto& target = dataset.column(target_col);

        {
            std::vector<double> pred_test, obs_test;
            pred_test.reserve(split.test.size());
            obs_test.reserve(split.test.size());
            for (std::size_t r : split.test) {
                pred_test.push_back(all_pred[r]);
                obs_test.push_back(target[r]);
            }
            result.test_rms = regressor::rms_error(mi::ScalarSeries(std::move(pred_test)),
                                                   mi::ScalarSeries(std::move(obs_test)));
        }

        if (cfg.eval_scope == EvalScope::all_rows) {
            result.score =
                mi::mutual_information(all_pred, mi::ScalarSeries(target), cfg.mi_cfg);
        } else {
            std::vector<double> pred_test, obs_test;
            for (std::size_t r : split.test) {
                pred_test.push_back(all_pred[r]);
                obs_test.push_back(target[r]);
            }
            result.score = mi::mutual_information(mi::ScalarSeries(std::move(pred_test)),
                                                  mi::ScalarSeries(std::move(obs_test)), cfg.mi_cfg);
        }
        result.epochs = static_cast<int>(trace.epochs.size());
        result.stop_reason = trace.stop_reason;
    } catch (const std::exception& e) {
        const double nan = std::nan("");
        result.failed = true;
        result.fail_reason = e.what();
        result.score = {nan, nan, nan, nan};
        result.test_rms = nan;
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// ============================================================================
// Checkpoint format
// ============================================================================

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == '\t' || c == '\n' || c == '\r' || c == ' ') c = '_';
    }
    return s;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

double parse_double(const std::string& s, bool& ok) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    ok = ok && !s.empty() && end == s.c_str() + s.size();
    return v;
}

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += ',';
        out += n;
    }
    return out;
}

constexpr const char* kFieldsLine =
    "#fields\tsubset\traw_mi\tmi_nats\tpearson\tdelta\ttest_rms\tepochs\tstop_reason\twall_s"
    "\tstatus";

}  // namespace

std::string checkpoint_header(const Manifest& m) {
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.dataset_hash));
    std::string out = "#relvar-search\tversion=" + m.version + "\n";
    out += "#manifest\tdataset_hash=" + std::string(hash) + "\tseed=" + std::to_string(m.seed) +
           "\ttarget=" + m.target + "\tuniverse=" + join_names(m.universe) +
           "\thidden=" + std::to_string(m.hidden_dim) +
           "\teval_scope=" + eval_scope_name(m.eval_scope) +
           "\tmin_size=" + std::to_string(m.min_size) +
           "\tmax_size=" + std::to_string(m.max_size) + "\tchi2=" + fmt_double(m.chi2_threshold) +
           "\tmin_cell=" + std::to_string(m.min_cell_count) + "\n";
    out += kFieldsLine;
    out += '\n';
    return out;
}

std::string checkpoint_record(const SearchResult& r, bool include_wall_time) {
    char wall[32];
    if (include_wall_time) {
        std::snprintf(wall, sizeof wall, "%.3f", r.wall_seconds);
    } else {
        std::snprintf(wall, sizeof wall, "-");
    }
    std::string status = r.failed ? "failed:" + sanitize(r.fail_reason) : "ok";
    return r.subset.canonical() + '\t' + fmt_double(r.score.raw_mi) + '\t' +
           fmt_double(r.score.mi_nats) + '\t' + fmt_double(r.score.pearson) + '\t' +
           fmt_double(r.score.delta) + '\t' + fmt_double(r.test_rms) + '\t' +
           std::to_string(r.epochs) + '\t' + regressor::stop_reason_name(r.stop_reason) + '\t' +
           wall + '\t' + status;
}

namespace {

Manifest parse_manifest(const std::string& version_line, const std::string& manifest_line,
                        const std::string& path) {
    const auto corrupt = [&](const std::string& why) -> void {
        raise(errc::checkpoint_corrupt, path + ": " + why);
    };
    const auto vfields = split_tabs(version_line);
    if (vfields.size() != 2 || vfields[0] != "#relvar-search" ||
        vfields[1].rfind("version=", 0) != 0) {
        corrupt("missing #relvar-search header");
    }
    Manifest m;
    m.version = vfields[1].substr(8);

    const auto mfields = split_tabs(manifest_line);
    if (mfields.empty() || mfields[0] != "#manifest") corrupt("missing #manifest line");
    for (std::size_t i = 1; i < mfields.size(); ++i) {
        const auto eq = mfields[i].find('=');
        if (eq == std::string::npos) corrupt("bad manifest field \"" + mfields[i] + "\"");
        const std::string key = mfields[i].substr(0, eq);
        const std::string value = mfields[i].substr(eq + 1);
        bool ok = true;
        if (key == "dataset_hash") {
            m.dataset_hash = std::strtoull(value.c_str(), nullptr, 16);
        } else if (key == "seed") {
            m.seed = std::strtoull(value.c_str(), nullptr, 10);
        } else if (key == "target") {
            m.target = value;
        } else if (key == "universe") {
            std::stringstream stream(value);
            std::string name;
            while (std::getline(stream, name, ',')) m.universe.push_back(name);
        } else if (key == "hidden") {
            m.hidden_dim = std::atoi(value.c_str());
        } else if (key == "eval_scope") {
            m.eval_scope = eval_scope_from_name(value);
        } else if (key == "min_size") {
            m.min_size = std::atoi(value.c_str());
        } else if (key == "max_size") {
            m.max_size = std::atoi(value.c_str());
        } else if (key == "chi2") {
            m.chi2_threshold = parse_double(value, ok);
        } else if (key == "min_cell") {
            m.min_cell_count = std::atoi(value.c_str());
        }  // unknown keys are ignored for forward compatibility
        if (!ok) corrupt("bad manifest value \"" + mfields[i] + "\"");
    }
    return m;
}

bool parse_record(const std::string& line,
                  const std::shared_ptr<const std::vector<std::string>>& universe,
                  SearchResult& out) {
    const auto fields = split_tabs(line);
    if (fields.size() != 10) return false;
    bool ok = true;
    try {
        out.subset = subset_from_canonical(universe, fields[0]);
        out.score.raw_mi = parse_double(fields[1], ok);
        out.score.mi_nats = parse_double(fields[2], ok);
        out.score.pearson = parse_double(fields[3], ok);
        out.score.delta = parse_double(fields[4], ok);
        out.test_rms = parse_double(fields[5], ok);
        out.epochs = std::atoi(fields[6].c_str());
        out.stop_reason = regressor::stop_reason_from_name(fields[7]);
        if (fields[8] == "-") {
            out.wall_seconds = 0.0;
        } else {
            out.wall_seconds = parse_double(fields[8], ok);
        }
        if (fields[9] == "ok") {
            out.failed = false;
        } else if (fields[9].rfind("failed:", 0) == 0) {
            out.failed = true;
            out.fail_reason = fields[9].substr(7);
        } else {
            return false;
        }
    } catch (const error&) {
        return false;
    }
    return ok;
}

}  // namespace

std::optional<CheckpointData> read_checkpoint(
    const std::string& path, std::shared_ptr<const std::vector<std::string>> universe) {
    std::ifstream in(path);
    if (!in) return std::nullopt;

    std::string version_line, manifest_line, fields_line;
    if (!std::getline(in, version_line) || !std::getline(in, manifest_line) ||
        !std::getline(in, fields_line)) {
        raise(errc::checkpoint_corrupt, path + ": truncated header");
    }
    if (fields_line != kFieldsLine) raise(errc::checkpoint_corrupt, path + ": bad #fields line");

    CheckpointData data;
    data.manifest = parse_manifest(version_line, manifest_line, path);

    std::deque<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    // A malformed final line is an interrupted write: drop it and re-run
    // that job. Anything malformed earlier means real corruption.
    if (!lines.empty()) {
        SearchResult probe;
        if (!parse_record(lines.back(), universe, probe)) lines.pop_back();
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        SearchResult r;
        if (!parse_record(lines[i], universe, r)) {
            raise(errc::checkpoint_corrupt,
                  path + ": malformed record at line " + std::to_string(i + 4));
        }
        data.results.push_back(std::move(r));
    }
    return data;
}

// ============================================================================
// Ranking order
// ============================================================================

namespace {

struct Keyed {
    SearchResult result;
    std::string canonical;
};

}  // namespace

void sort_ranking(std::vector<SearchResult>& results) {
    std::vector<Keyed> keyed;
    keyed.reserve(results.size());
    for (auto& r : results) {
        std::string c = r.subset.canonical();
        keyed.push_back({std::move(r), std::move(c)});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.result.failed != b.result.failed) return b.result.failed;
        if (!a.result.failed) {
            if (a.result.score.mi_nats != b.result.score.mi_nats) {
                return a.result.score.mi_nats > b.result.score.mi_nats;
            }
            if (a.result.score.pearson != b.result.score.pearson) {
                return a.result.score.pearson > b.result.score.pearson;
            }
        }
        return a.canonical < b.canonical;
    });
    results.clear();
    for (auto& k : keyed) results.push_back(std::move(k.result));
}

// ============================================================================
// Search driver
// ============================================================================

SearchOutcome run_search(const data::Dataset& dataset, const std::string& target_col,
                         std::shared_ptr<const std::vector<std::string>> universe,
                         const SearchConfig& cfg, const std::string& checkpoint_path,
                         bool resume,
                         const std::function<void(std::size_t, std::size_t)>& progress) {
    if (cfg.workers < 1) raise(errc::invalid_config, "workers must be >= 1");
    for (const auto& name : *universe) {
        if (name == target_col) {
            raise(errc::invalid_config, "target \"" + target_col + "\" cannot be in the universe");
        }
        dataset.column_index(name);  // every universe column must exist
    }
    dataset.column_index(target_col);

    const int max_size = cfg.max_size == 0 ? static_cast<int>(universe->size()) : cfg.max_size;
    const auto subsets = enumerate_subsets(universe, cfg.min_size, max_size);
    const Manifest manifest = make_manifest(dataset, target_col, *universe, cfg);

    SearchOutcome outcome;
    outcome.total_jobs = subsets.size();

    std::unordered_map<std::uint64_t, SearchResult> completed;
    if (resume) {
        auto data = read_checkpoint(checkpoint_path, universe);
        if (data) {
            if (!data->manifest.compatible_with(manifest)) {
                raise(errc::checkpoint_corrupt,
                      checkpoint_path +
                          ": manifest does not match this search (different data, seed, or "
                          "config); use --restart to discard it");
            }
            for (auto& r : data->results) completed.emplace(r.subset.mask, std::move(r));
        }
    }
    outcome.resumed = completed.size();

    std::vector<FeatureSubset> pending;
    for (const auto& s : subsets) {
        if (!completed.contains(s.mask)) pending.push_back(s);
    }
    std::size_t to_run = pending.size();
    if (cfg.max_jobs > 0 && cfg.max_jobs < to_run) {
        to_run = cfg.max_jobs;
        outcome.budget_exhausted = true;
    }

    // Rewrite the checkpoint from scratch: this heals a partial trailing
    // line left by a killed process, then appends new records.
    std::ofstream ckpt(checkpoint_path, std::ios::trunc);
    if (!ckpt) raise(errc::io_error, "cannot write " + checkpoint_path);
    ckpt << checkpoint_header(manifest);
    for (const auto& s : subsets) {
        const auto it = completed.find(s.mask);
        if (it != completed.end()) ckpt << checkpoint_record(it->second, true) << '\n';
    }
    ckpt.flush();

    // Workers pull jobs from a shared index and push results to the
    // coordinator; this thread is the only writer of the checkpoint.
    if (to_run > 0) {
        std::atomic<std::size_t> next{0};
        std::mutex mutex;
        std::condition_variable cv;
        std::deque<SearchResult> inbox;

        const std::size_t worker_count =
            std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), to_run);
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w) {
            workers.emplace_back([&]() {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= to_run) return;
                    SearchResult r = evaluate_subset(pending[i], dataset, target_col, cfg);
                    {
                        std::lock_guard lock(mutex);
                        inbox.push_back(std::move(r));
                    }
                    cv.notify_one();
                }
            });
        }

        std::size_t received = 0;
        while (received < to_run) {
            SearchResult r;
            {
                std::unique_lock lock(mutex);
                cv.wait(lock, [&] { return !inbox.empty(); });
                r = std::move(inbox.front());
                inbox.pop_front();
            }
            ++received;
            ckpt << checkpoint_record(r, true) << '\n';
            ckpt.flush();
            completed.emplace(r.subset.mask, std::move(r));
            if (progress) progress(outcome.resumed + received, subsets.size());
        }
        for (auto& t : workers) t.join();
    }
    outcome.evaluated = to_run;

    outcome.table.manifest = manifest;
    outcome.table.results.reserve(completed.size());
    for (const auto& s : subsets) {
        const auto it = completed.find(s.mask);
        if (it == completed.end()) continue;  // only under a job budget
        if (it->second.failed) ++outcome.failed;
        outcome.table.results.push_back(it->second);
    }
    sort_ranking(outcome.table.results);
    return outcome;
}

// ============================================================================
// Reports
// ============================================================================

std::string report_table(const RankingTable& table, int top_n) {
    if (top_n < 1) raise(errc::invalid_config, "top_n must be >= 1");
    std::string out = "Combination | MI | rho\n";
    int shown = 0;
    char buf[64];
    for (const auto& r : table.results) {
        if (r.failed) break;  // failed rows sort last and carry no score
        if (shown == top_n) break;
        std::snprintf(buf, sizeof buf, " | %.3f | %.3f\n", r.score.mi_nats, r.score.pearson);
        out += r.subset.canonical() + buf;
        ++shown;
    }
    return out;
}

void write_ranking(const RankingTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(errc::io_error, "cannot write " + path);
    out << checkpoint_header(table.manifest);
    for (const auto& r : table.results) out << checkpoint_record(r, false) << '\n';
    if (!out) raise(errc::io_error, "short write to " + path);
}

}  // namespace relvar::search
