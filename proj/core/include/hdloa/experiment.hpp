#pragma once

#include "hdloa/core.hpp"
#include "hdloa/data.hpp"
#include "hdloa/json_io.hpp"
#include "hdloa/llm.hpp"
#include "hdloa/promptkit.hpp"
#include "hdloa/score.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hdloa::experiment {

struct BackendConfig {
    enum class Kind { Mock, Http };
    Kind kind = Kind::Mock;
    std::filesystem::path script;  // mock
    llm::HttpConfig http;
};

// Heuristic generation + selection, used when no heuristics file is given.
struct GenerationConfig {
    bool enabled = false;
    std::filesystem::path train_path;
    double fraction = 0.01;
    std::string task_description;  // empty: the built-in EAE description
};

struct RunConfig {
    TaskKind task = TaskKind::EaeRams;
    data::DatasetManifest dataset;
    prompt::Style style = prompt::Style::HdLoa;
    // A JSONL file, or the word "default" for templates/<task>/heuristics.jsonl.
    std::optional<std::string> heuristics_path;
    GenerationConfig generation;
    int k = 3;
    int n_generate = 10;
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::vector<std::string> stop_sequences;
    std::size_t max_parallel = 4;
    std::optional<std::filesystem::path> cache_dir;
    std::uint64_t seed = 0;
    prompt::Ablation ablation = prompt::Ablation::None;
    std::optional<std::size_t> eval_limit;
    BackendConfig backend;
    std::string policy = "default";
    std::optional<std::size_t> max_answers;  // default_max_answers(task) when unset
    std::optional<std::filesystem::path> template_dir;
    std::optional<std::filesystem::path> output;
    std::optional<std::filesystem::path> instances_dir;  // one file per instance
    std::string base_role = "giver";
};

// Relative paths in the file are resolved against `base_dir`. Throws
// ConfigError on unknown keys, bad values or a config that fails validate().
RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
void validate(const RunConfig& config);
Json to_json(const RunConfig& config);

// Throws ConfigError when an HTTP credential is missing.
std::shared_ptr<llm::Backend> make_backend(const BackendConfig& config);

struct ReportBundle {
    Json config;
    Json templates;   // asset name -> sha256
    Json heuristics;  // heuristics placed in the prompt
    Json selection;   // null unless heuristics were generated in this run
    Json aggregate;   // deterministic given config, data and completions
    Json instances;   // per-instance records, evaluation order
    Json runtime;     // timing and cache counters; varies between runs

    Json to_json() const;
    static ReportBundle from_json(const Json& j);
    static ReportBundle load(const std::filesystem::path& path);
};

struct RunOptions {
    // Replaces the backend named in the config (tests inject mocks here).
    std::shared_ptr<llm::Backend> backend;
    std::function<void(std::chrono::milliseconds)> sleep;
};

// Runs the whole pipeline and writes the bundle to config.output (atomically)
// when set. Instance failures are recorded with status "failed"; if any
// occurred the bundle is still written and BackendError is thrown afterwards,
// naming the first failed instance.
ReportBundle run_experiment(const RunConfig& config, const RunOptions& options = {});

// Aggregate section rebuilt from per-instance records and the config echo.
Json recompute_aggregate(const ReportBundle& bundle);

struct ComparisonRow {
    std::string method;
    std::vector<double> values;  // percent, one per metric
    std::vector<double> deltas;  // against the baseline row
};

struct Comparison {
    std::string task;
    std::string split;
    std::vector<std::string> metrics;  // "Arg-I", "Arg-C" or "Accuracy"
    std::size_t baseline = 0;
    std::vector<ComparisonRow> rows;
};

// Needs >= 2 bundles over the same task, split and evaluated instance ids.
Comparison compare_runs(std::span<const ReportBundle> bundles, std::size_t baseline = 0);

enum class Format { Table, Markdown };
Format parse_format(std::string_view name);
std::string format_comparison(const Comparison& comparison, Format format);
std::string format_report(const ReportBundle& bundle, Format format);

// "+4.65", "-3.34", "+0.00".
std::string format_delta(double delta);

}  // namespace hdloa::experiment
