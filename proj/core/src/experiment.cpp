#include "hdloa/experiment.hpp"

#include "hdloa/error.hpp"
#include "hdloa/heuristics.hpp"
#include "hdloa/parse.hpp"
#include "hdloa/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace hdloa::experiment {

// ---------------------------------------------------------------- config

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

template <typename T>
T get_as(const Json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown " + where + " key '" + key + "'");
    }
}

}  // namespace

RunConfig parse_run_config(const Json& j, const std::filesystem::path& base) {
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    reject_unknown(j,
                   {"task", "dataset", "style", "heuristics_path", "generation", "k", "n_generate", "model_id",
                    "temperature", "max_tokens", "stop_sequences", "max_parallel", "cache_dir", "seed", "ablation",
                    "eval_limit", "backend", "policy", "max_answers", "template_dir", "output", "instances_dir",
                    "base_role"},
                   "config");
    RunConfig c;
    c.task = parse_task_kind(get_as<std::string>(j, "task"));

    if (!j.contains("dataset") || !j.at("dataset").is_object()) throw ConfigError("config needs a 'dataset' object");
    const auto& d = j.at("dataset");
    reject_unknown(d, {"path", "split", "expected_count"}, "dataset");
    c.dataset.task = c.task;
    c.dataset.path = resolve(base, get_as<std::string>(d, "path"));
    if (d.contains("split")) c.dataset.split = data::parse_split(get_as<std::string>(d, "split"));
    if (d.contains("expected_count")) c.dataset.expected_count = get_as<std::size_t>(d, "expected_count");

    if (j.contains("style")) c.style = prompt::parse_style(get_as<std::string>(j, "style"));
    if (j.contains("heuristics_path")) {
        auto h = get_as<std::string>(j, "heuristics_path");
        c.heuristics_path = h == "default" ? h : resolve(base, h).string();
    }
    if (j.contains("generation")) {
        const auto& g = j.at("generation");
        reject_unknown(g, {"enabled", "train_path", "fraction", "task_description"}, "generation");
        c.generation.enabled = g.value("enabled", true);
        if (g.contains("train_path")) c.generation.train_path = resolve(base, get_as<std::string>(g, "train_path"));
        if (g.contains("fraction")) c.generation.fraction = get_as<double>(g, "fraction");
        if (g.contains("task_description")) c.generation.task_description = get_as<std::string>(g, "task_description");
    }
    if (j.contains("k")) c.k = get_as<int>(j, "k");
    if (j.contains("n_generate")) c.n_generate = get_as<int>(j, "n_generate");
    c.model_id = get_as<std::string>(j, "model_id");
    if (j.contains("temperature")) c.temperature = get_as<double>(j, "temperature");
    if (j.contains("max_tokens")) c.max_tokens = get_as<int>(j, "max_tokens");
    if (j.contains("stop_sequences")) c.stop_sequences = get_as<std::vector<std::string>>(j, "stop_sequences");
    if (j.contains("max_parallel")) c.max_parallel = get_as<std::size_t>(j, "max_parallel");
    if (j.contains("cache_dir")) c.cache_dir = resolve(base, get_as<std::string>(j, "cache_dir"));
    if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
    if (j.contains("ablation") && !j.at("ablation").is_null()) {
        c.ablation = prompt::parse_ablation(get_as<std::string>(j, "ablation"));
    }
    if (j.contains("eval_limit") && !j.at("eval_limit").is_null()) c.eval_limit = get_as<std::size_t>(j, "eval_limit");

    if (!j.contains("backend") || !j.at("backend").is_object()) throw ConfigError("config needs a 'backend' object");
    const auto& b = j.at("backend");
    reject_unknown(b, {"kind", "script", "base_url", "path", "api_key_env", "response_field", "timeout_seconds"},
                   "backend");
    const auto kind = get_as<std::string>(b, "kind");
    if (kind == "mock") {
        c.backend.kind = BackendConfig::Kind::Mock;
        c.backend.script = resolve(base, get_as<std::string>(b, "script"));
    } else if (kind == "http") {
        c.backend.kind = BackendConfig::Kind::Http;
        c.backend.http.base_url = get_as<std::string>(b, "base_url");
        if (b.contains("path")) c.backend.http.path = get_as<std::string>(b, "path");
        if (b.contains("api_key_env")) c.backend.http.api_key_env = get_as<std::string>(b, "api_key_env");
        if (b.contains("response_field")) c.backend.http.response_field = get_as<std::string>(b, "response_field");
        if (b.contains("timeout_seconds")) c.backend.http.timeout_seconds = get_as<int>(b, "timeout_seconds");
    } else {
        throw ConfigError("backend kind must be 'mock' or 'http', got '" + kind + "'");
    }

    if (j.contains("policy")) c.policy = get_as<std::string>(j, "policy");
    if (j.contains("max_answers") && !j.at("max_answers").is_null()) {
        c.max_answers = get_as<std::size_t>(j, "max_answers");
    }
    if (j.contains("template_dir")) c.template_dir = resolve(base, get_as<std::string>(j, "template_dir"));
    if (j.contains("output")) c.output = resolve(base, get_as<std::string>(j, "output"));
    if (j.contains("instances_dir")) c.instances_dir = resolve(base, get_as<std::string>(j, "instances_dir"));
    if (j.contains("base_role")) c.base_role = get_as<std::string>(j, "base_role");
    validate(c);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    Json j;
    try {
        j = Json::parse(util::read_file(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

void validate(const RunConfig& c) {
    if (c.model_id.empty()) throw ConfigError("config: model_id is empty");
    if (c.k < 1) throw ConfigError("config: k must be >= 1");
    if (c.n_generate < 1) throw ConfigError("config: n_generate must be >= 1");
    if (!(c.temperature >= 0.0)) throw ConfigError("config: temperature must be >= 0");
    if (c.max_tokens < 1) throw ConfigError("config: max_tokens must be >= 1");
    if (c.max_parallel < 1) throw ConfigError("config: max_parallel must be >= 1");
    if (c.eval_limit && *c.eval_limit == 0) throw ConfigError("config: eval_limit must be >= 1");
    if (c.max_answers && *c.max_answers == 0) throw ConfigError("config: max_answers must be >= 1");
    if (c.style == prompt::Style::HdLoa) {
        if (!c.heuristics_path && !c.generation.enabled && c.ablation != prompt::Ablation::NoHeuristics) {
            throw ConfigError("config: HD-LoA style needs heuristics_path or generation");
        }
        if (!c.heuristics_path && c.generation.enabled) {
            if (!is_eae(c.task)) throw ConfigError("config: heuristic generation is only defined for EAE tasks");
            if (c.generation.train_path.empty()) throw ConfigError("config: generation needs train_path");
            if (!(c.generation.fraction > 0.0 && c.generation.fraction <= 1.0)) {
                throw ConfigError("config: generation fraction must be in (0, 1]");
            }
        }
    } else if (c.ablation != prompt::Ablation::None) {
        throw ConfigError("config: ablations only apply to the HD-LoA style");
    }
    score::parse_policy(c.policy);
}

Json to_json(const RunConfig& c) {
    Json j;
    j["task"] = std::string(to_string(c.task));
    Json d;
    d["path"] = c.dataset.path.string();
    d["split"] = std::string(data::to_string(c.dataset.split));
    d["expected_count"] = c.dataset.expected_count ? Json(*c.dataset.expected_count) : Json(nullptr);
    j["dataset"] = std::move(d);
    j["style"] = std::string(prompt::to_string(c.style));
    j["heuristics_path"] = c.heuristics_path ? Json(*c.heuristics_path) : Json(nullptr);
    j["generation"] = {{"enabled", c.generation.enabled},
                       {"train_path", c.generation.train_path.string()},
                       {"fraction", c.generation.fraction},
                       {"task_description", c.generation.task_description}};
    j["k"] = c.k;
    j["n_generate"] = c.n_generate;
    j["model_id"] = c.model_id;
    j["temperature"] = c.temperature;
    j["max_tokens"] = c.max_tokens;
    j["stop_sequences"] = c.stop_sequences;
    j["max_parallel"] = c.max_parallel;
    j["cache_dir"] = c.cache_dir ? Json(c.cache_dir->string()) : Json(nullptr);
    j["seed"] = c.seed;
    j["ablation"] = std::string(prompt::to_string(c.ablation));
    j["eval_limit"] = c.eval_limit ? Json(*c.eval_limit) : Json(nullptr);
    if (c.backend.kind == BackendConfig::Kind::Mock) {
        j["backend"] = {{"kind", "mock"}, {"script", c.backend.script.string()}};
    } else {
        j["backend"] = {{"kind", "http"},
                        {"base_url", c.backend.http.base_url},
                        {"path", c.backend.http.path},
                        {"api_key_env", c.backend.http.api_key_env},
                        {"response_field", c.backend.http.response_field},
                        {"timeout_seconds", c.backend.http.timeout_seconds}};
    }
    j["policy"] = c.policy;
    j["max_answers"] = c.max_answers ? Json(*c.max_answers) : Json(nullptr);
    j["template_dir"] = c.template_dir ? Json(c.template_dir->string()) : Json(nullptr);
    j["output"] = c.output ? Json(c.output->string()) : Json(nullptr);
    j["instances_dir"] = c.instances_dir ? Json(c.instances_dir->string()) : Json(nullptr);
    j["base_role"] = c.base_role;
    return j;
}

std::shared_ptr<llm::Backend> make_backend(const BackendConfig& b) {
    if (b.kind == BackendConfig::Kind::Mock) {
        if (!std::filesystem::exists(b.script)) throw ConfigError("mock script not found: " + b.script.string());
        return std::make_shared<llm::MockBackend>(llm::MockScript::load(b.script));
    }
    return std::make_shared<llm::HttpBackend>(b.http);
}

// ---------------------------------------------------------------- bundle

Json ReportBundle::to_json() const {
    Json j;
    j["config"] = config;
    j["templates"] = templates;
    j["heuristics"] = heuristics;
    j["selection"] = selection;
    j["aggregate"] = aggregate;
    j["instances"] = instances;
    j["runtime"] = runtime;
    return j;
}

ReportBundle ReportBundle::from_json(const Json& j) {
    ReportBundle b;
    try {
        b.config = j.at("config");
        b.templates = j.value("templates", Json::object());
        b.heuristics = j.value("heuristics", Json::array());
        b.selection = j.value("selection", Json());
        b.aggregate = j.at("aggregate");
        b.instances = j.at("instances");
        b.runtime = j.value("runtime", Json::object());
    } catch (const Json::exception& e) {
        throw DataError(std::string("not a report bundle: ") + e.what());
    }
    return b;
}

ReportBundle ReportBundle::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("report not found: " + path.string());
    try {
        return from_json(Json::parse(util::read_file(path)));
    } catch (const Json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

namespace {

Json counts_json(const MatchCounts& c) {
    return {{"tp_i", c.tp_i}, {"fp_i", c.fp_i}, {"fn_i", c.fn_i},
            {"tp_c", c.tp_c}, {"fp_c", c.fp_c}, {"fn_c", c.fn_c}};
}

MatchCounts counts_from_json(const Json& j) {
    MatchCounts c;
    c.tp_i = j.at("tp_i").get<std::int64_t>();
    c.fp_i = j.at("fp_i").get<std::int64_t>();
    c.fn_i = j.at("fn_i").get<std::int64_t>();
    c.tp_c = j.at("tp_c").get<std::int64_t>();
    c.fp_c = j.at("fp_c").get<std::int64_t>();
    c.fn_c = j.at("fn_c").get<std::int64_t>();
    return c;
}

Json diagnostics_json(const parse::ParseDiagnostics& d) {
    return {{"matched_roles", d.matched_roles},
            {"missing_roles", d.missing_roles},
            {"stray_lines", d.stray_lines},
            {"used_fallback", d.used_fallback}};
}

std::string asset_digest(const std::filesystem::path& p) {
    return std::filesystem::exists(p) ? util::sha256_hex(util::read_file(p)) : std::string("missing");
}

Json template_digests(const prompt::TemplateStore& store, const RunConfig& c) {
    Json j = Json::object();
    const std::string task(to_string(c.task));
    std::vector<std::string> names{"target.txt", "demos.json"};
    if (c.style == prompt::Style::HdLoa) {
        names.push_back(c.ablation == prompt::Ablation::NoHeuristics ? "hdloa_no_heuristics.txt" : "hdloa.txt");
    } else {
        names.push_back(std::string(prompt::to_string(c.style)) + ".txt");
    }
    if (c.heuristics_path && *c.heuristics_path == "default") names.push_back("heuristics.jsonl");
    std::sort(names.begin(), names.end());
    for (const auto& n : names) j[task + "/" + n] = asset_digest(store.path(task, n));
    if (!c.heuristics_path && c.generation.enabled) {
        j["heuristics/generate.txt"] = asset_digest(store.path("heuristics", "generate.txt"));
    }
    return j;
}

struct HeuristicChoice {
    std::vector<Heuristic> items;
    Json selection;  // null unless generated here
};

HeuristicChoice choose_heuristics(const RunConfig& c, const prompt::TemplateStore& store, llm::Client& client,
                                  const llm::CompletionRequest& request_template,
                                  const std::vector<prompt::Exemplar>& loa_exemplars) {
    HeuristicChoice out;
    if (c.style != prompt::Style::HdLoa || c.ablation == prompt::Ablation::NoHeuristics) return out;
    if (c.heuristics_path) {
        out.items = *c.heuristics_path == "default" ? prompt::load_default_heuristics(store, c.task)
                                                     : load_heuristics(*c.heuristics_path);
        if (out.items.empty()) throw ConfigError("heuristics file is empty: " + *c.heuristics_path);
        if (out.items.size() > static_cast<std::size_t>(c.k)) {
            const bool measured = std::all_of(out.items.begin(), out.items.end(),
                                              [](const Heuristic& h) { return h.eval_accuracy.has_value(); });
            if (measured) heuristics::rank_in_place(out.items);
            out.items.resize(static_cast<std::size_t>(c.k));
        }
        return out;
    }
    heuristics::GenerationParams gp;
    gp.base_role = c.base_role;
    gp.n = c.n_generate;
    if (!c.generation.task_description.empty()) gp.task_description = c.generation.task_description;
    const auto set = heuristics::generate_heuristics(client, store, gp, request_template);
    data::DatasetManifest train{c.task, c.generation.train_path, data::Split::Train, std::nullopt};
    const auto pool = data::load_eae(train);
    const auto subset = data::sample_subset(pool, c.generation.fraction, c.seed);
    const std::size_t max_answers = c.max_answers.value_or(default_max_answers(c.task));
    auto evaluator =
        heuristics::make_llm_evaluator(client, store, c.task, loa_exemplars, request_template, max_answers, c.base_role);
    heuristics::SelectionOptions opts;
    opts.policy = score::parse_policy(c.policy);
    opts.max_parallel = c.max_parallel;
    opts.seed = c.seed;
    const auto ranked = heuristics::select_heuristics(set, subset, c.k, evaluator, opts);
    out.items = ranked.ranked;
    out.selection = heuristics::to_json(ranked);
    out.selection["subset_ids"] = Json::array();
    for (const auto& inst : subset) out.selection["subset_ids"].push_back(inst.id);
    return out;
}

std::set<std::string> exemplar_roles(const std::vector<prompt::Exemplar>& exemplars) {
    std::set<std::string> roles;
    for (const auto& ex : exemplars) roles.insert(ex.label_coverage.begin(), ex.label_coverage.end());
    return roles;
}

// Keeps the error class (and so the CLI exit code) while adding context.
[[noreturn]] void rethrow_with_context(const std::string& ctx) {
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(ctx + e.what());
    } catch (const DataError& e) {
        throw DataError(ctx + e.what());
    } catch (const PreconditionError& e) {
        throw PreconditionError(ctx + e.what());
    } catch (const ParseError& e) {
        throw ParseError(ctx + e.what());
    } catch (const BackendError& e) {
        throw BackendError(ctx + e.what());
    } catch (const Error& e) {
        throw Error(ctx + e.what());
    }
}

std::string safe_file_name(const std::string& id) {
    std::string out;
    for (char ch : id) out.push_back(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ? ch : '_');
    return out + "-" + util::sha256_hex(id).substr(0, 8) + ".json";
}

}  // namespace

Json recompute_aggregate(const ReportBundle& b) {
    const auto task = parse_task_kind(b.config.at("task").get<std::string>());
    Json a;
    a["task"] = b.config.at("task");
    a["split"] = b.config.at("dataset").at("split");
    a["style"] = b.config.at("style");
    a["ablation"] = b.config.at("ablation");
    a["model_id"] = b.config.at("model_id");
    a["seed"] = b.config.at("seed");
    a["instances"] = b.instances.size();
    Json ids = Json::array();
    std::size_t failed = 0;
    for (const auto& rec : b.instances) {
        ids.push_back(rec.at("id"));
        if (rec.at("status") == "failed") ++failed;
    }
    a["failed"] = failed;
    a["evaluated_ids"] = std::move(ids);

    if (is_eae(task)) {
        const auto policy = score::parse_policy(b.config.at("policy").get<std::string>());
        a["policy"] = score::to_json(policy);
        MatchCounts total, seen, unseen;
        std::size_t seen_pairs = 0, unseen_pairs = 0;
        std::map<std::string, score::RoleCounts> per_role;
        Json shared = Json::array();
        for (const auto& rec : b.instances) {
            total += counts_from_json(rec.at("counts"));
            seen += counts_from_json(rec.at("seen_unseen").at("seen"));
            unseen += counts_from_json(rec.at("seen_unseen").at("unseen"));
            seen_pairs += rec.at("seen_unseen").at("seen_pairs").get<std::size_t>();
            unseen_pairs += rec.at("seen_unseen").at("unseen_pairs").get<std::size_t>();
            for (const auto& [role, c] : rec.at("per_role").items()) {
                auto& rc = per_role[role];
                rc.tp += c.at("tp").get<std::int64_t>();
                rc.fp += c.at("fp").get<std::int64_t>();
                rc.fn += c.at("fn").get<std::int64_t>();
            }
            if (rec.at("shared_gold").get<bool>()) shared.push_back(rec.at("id"));
        }
        a["scores"] = to_json(EAEScores::from_counts(total));
        Json roles = Json::object();
        for (const auto& [role, rc] : per_role) {
            const Prf p = prf_from_counts(rc.tp, rc.fp, rc.fn);
            roles[role] = {{"tp", rc.tp}, {"fp", rc.fp}, {"fn", rc.fn}, {"f1", format_fraction(p.f1)}};
        }
        a["per_role"] = std::move(roles);
        a["seen_unseen"] = {{"seen", to_json(EAEScores::from_counts(seen))},
                            {"unseen", to_json(EAEScores::from_counts(unseen))},
                            {"seen_pairs", seen_pairs},
                            {"unseen_pairs", unseen_pairs}};
        a["shared_gold_instances"] = std::move(shared);
    } else {
        std::size_t correct = 0, parse_errors = 0;
        for (const auto& rec : b.instances) {
            if (rec.at("correct").get<bool>()) ++correct;
            if (rec.at("status") == "parse_error") ++parse_errors;
        }
        const std::size_t n = b.instances.size();
        a["scores"] = {{"accuracy", format_fraction(n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0)},
                       {"correct", correct},
                       {"total", n},
                       {"parse_errors", parse_errors}};
    }
    return a;
}

ReportBundle run_experiment(const RunConfig& c, const RunOptions& options) {
    validate(c);
    const auto t0 = std::chrono::steady_clock::now();
    const prompt::TemplateStore store(c.template_dir.value_or(prompt::default_template_dir()));
    const auto policy = score::parse_policy(c.policy);
    const std::size_t max_answers = c.max_answers.value_or(default_max_answers(c.task));

    llm::ClientOptions copts;
    copts.max_parallel = c.max_parallel;
    copts.cache_dir = c.cache_dir;
    if (options.sleep) copts.sleep = options.sleep;
    llm::Client client(options.backend ? options.backend : make_backend(c.backend), copts);

    llm::CompletionRequest request_template;
    request_template.model_id = c.model_id;
    request_template.temperature = c.temperature;
    request_template.max_tokens = c.max_tokens;
    request_template.stop_sequences = c.stop_sequences;

    const auto demos = prompt::load_demos(store, c.task);
    const auto exemplars = prompt::exemplars_for(store, demos, c.style, c.ablation);
    const auto loa_exemplars = c.style == prompt::Style::HdLoa && c.ablation == prompt::Ablation::None
                                   ? exemplars
                                   : prompt::exemplars_for(store, demos, prompt::Style::HdLoa);
    const auto chosen = choose_heuristics(c, store, client, request_template, loa_exemplars);

    ReportBundle bundle;
    bundle.config = to_json(c);
    bundle.templates = template_digests(store, c);
    bundle.heuristics = Json::array();
    for (const auto& h : chosen.items) bundle.heuristics.push_back(to_json(h));
    bundle.selection = chosen.selection;

    auto build = [&](const auto& target) {
        if (c.style == prompt::Style::HdLoa) {
            return prompt::build_hdloa_prompt(store, c.task, chosen.items, exemplars, target, c.ablation, c.base_role);
        }
        return prompt::build_baseline_prompt(store, c.style, c.task, exemplars, target);
    };

    std::vector<Json> records;
    std::vector<std::string> failures;
    std::size_t prompt_chars = 0;

    auto complete_one = [&](Json& rec, const std::string& prompt_text) -> std::optional<std::string> {
        llm::CompletionRequest req = request_template;
        req.prompt = prompt_text;
        rec["prompt_digest"] = llm::prompt_digest(prompt_text);
        rec["cache_key"] = llm::cache_key(req);
        rec["prompt_chars"] = prompt_text.size();
        try {
            auto result = client.complete(req);
            rec["raw_output"] = result.text;
            return std::move(result.text);
        } catch (const Error& e) {
            rec["status"] = "failed";
            rec["error"] = e.what();
            rec["raw_output"] = nullptr;
            return std::nullopt;
        }
    };

    auto persist = [&](const Json& rec) {
        if (c.instances_dir) {
            util::write_file_atomic(*c.instances_dir / safe_file_name(rec.at("id").get<std::string>()),
                                    rec.dump(2) + "\n");
        }
    };

    if (c.instances_dir) std::filesystem::create_directories(*c.instances_dir);

    if (is_eae(c.task)) {
        auto instances = data::load_eae(c.dataset);
        if (c.eval_limit && instances.size() > *c.eval_limit) instances = data::sample_count(instances, *c.eval_limit, c.seed);
        const auto seen_roles = exemplar_roles(exemplars);
        records.resize(instances.size());
        util::parallel_for(instances.size(), c.max_parallel, [&](std::size_t i) {
            const auto& inst = instances[i];
            Json rec;
            rec["id"] = inst.id;
            rec["status"] = "ok";
            try {
                const auto bundle_i = build(inst);
                RolePredictions pred;
                parse::ParseDiagnostics diag;
                if (auto text = complete_one(rec, bundle_i.rendered)) {
                    auto parsed = parse::parse_eae_output(*text, inst.roles, max_answers);
                    pred = std::move(parsed.predictions);
                    diag = std::move(parsed.diagnostics);
                } else {
                    for (const auto& r : inst.roles) {
                        pred.per_role[r];
                        diag.missing_roles.insert(r);
                    }
                    diag.used_fallback = true;
                }
                Json p = Json::object();
                for (const auto& r : inst.roles) p[r] = pred.per_role[r];
                rec["predictions"] = std::move(p);
                rec["diagnostics"] = diagnostics_json(diag);
                const std::vector<EAEInstance> one{inst};
                const std::vector<score::PredictionRecord> prec{{inst.id, pred}};
                const auto report = score::score_eae_report(one, prec, policy);
                rec["counts"] = counts_json(report.overall.counts);
                Json roles = Json::object();
                for (const auto& [role, rc] : report.per_role) roles[role] = {{"tp", rc.tp}, {"fp", rc.fp}, {"fn", rc.fn}};
                rec["per_role"] = std::move(roles);
                rec["shared_gold"] = !report.shared_gold_instances.empty();
                const auto su = score::seen_unseen_breakdown(one, prec, seen_roles, policy);
                rec["seen_unseen"] = {{"seen", counts_json(su.seen.counts)},
                                      {"unseen", counts_json(su.unseen.counts)},
                                      {"seen_pairs", su.seen_pairs},
                                      {"unseen_pairs", su.unseen_pairs}};
            } catch (const Error&) {
                rethrow_with_context("instance '" + inst.id + "': ");
            }
            persist(rec);
            records[i] = std::move(rec);
        });
    } else {
        auto instances = data::load_classification(c.dataset);
        if (c.eval_limit && instances.size() > *c.eval_limit) instances = data::sample_count(instances, *c.eval_limit, c.seed);
        records.resize(instances.size());
        util::parallel_for(instances.size(), c.max_parallel, [&](std::size_t i) {
            const auto& inst = instances[i];
            Json rec;
            rec["id"] = inst.id;
            rec["status"] = "ok";
            rec["gold"] = inst.gold_label;
            rec["predicted"] = nullptr;
            try {
                const auto bundle_i = build(inst);
                if (auto text = complete_one(rec, bundle_i.rendered)) {
                    try {
                        rec["predicted"] = parse::parse_label_output(*text, c.task);
                    } catch (const ParseError& e) {
                        rec["status"] = "parse_error";
                        rec["error"] = e.what();
                    }
                }
            } catch (const Error&) {
                rethrow_with_context("instance '" + inst.id + "': ");
            }
            rec["correct"] = rec["predicted"].is_string() && rec["predicted"].get<std::string>() == inst.gold_label;
            persist(rec);
            records[i] = std::move(rec);
        });
    }

    bundle.instances = Json::array();
    for (auto& rec : records) {
        if (rec.at("status") == "failed") failures.push_back(rec.at("id").get<std::string>() + ": " + rec.at("error").get<std::string>());
        prompt_chars += rec.value("prompt_chars", std::size_t{0});
        bundle.instances.push_back(std::move(rec));
    }
    bundle.aggregate = recompute_aggregate(bundle);

    const auto stats = client.stats();
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    bundle.runtime = {{"wall_ms", elapsed},
                      {"requests", stats.requests},
                      {"cache_hits", stats.cache_hits},
                      {"backend_calls", stats.backend_calls},
                      {"retries", stats.retries},
                      {"cache_hit_rate", stats.requests ? static_cast<double>(stats.cache_hits) /
                                                              static_cast<double>(stats.requests)
                                                        : 0.0},
                      {"prompt_chars", prompt_chars},
                      {"backend_id", client.backend().id()}};

    if (c.output) util::write_file_atomic(*c.output, bundle.to_json().dump(2) + "\n");
    if (!failures.empty()) {
        throw BackendError(std::to_string(failures.size()) + " instance(s) failed; first: " + failures.front() +
                           (c.output ? "; partial report written to " + c.output->string() : std::string{}));
    }
    return bundle;
}

// ---------------------------------------------------------------- comparison

namespace {

std::string method_name(const ReportBundle& b) {
    std::string name = b.config.at("style").get<std::string>();
    const auto ablation = b.config.value("ablation", std::string("none"));
    if (ablation != "none") name += "/" + ablation;
    return name + " (" + b.config.at("model_id").get<std::string>() + ")";
}

std::vector<double> metric_values(const ReportBundle& b, bool eae) {
    const auto& s = b.aggregate.at("scores");
    if (eae) {
        const auto c = counts_from_json(s.at("counts"));
        const auto scores = EAEScores::from_counts(c);
        return {scores.arg_i.f1 * 100.0, scores.arg_c.f1 * 100.0};
    }
    const double total = s.at("total").get<double>();
    return {total > 0 ? s.at("correct").get<double>() / total * 100.0 : 0.0};
}

std::string two_decimals(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string format_delta(double delta) {
    // Avoid printing "-0.00" for tiny negative rounding noise.
    if (std::fabs(delta) < 0.005) delta = 0.0;
    return (delta >= 0 ? "+" : "") + two_decimals(delta);
}

Comparison compare_runs(std::span<const ReportBundle> bundles, std::size_t baseline) {
    if (bundles.size() < 2) throw PreconditionError("compare needs at least two reports");
    if (baseline >= bundles.size()) throw PreconditionError("baseline index out of range");
    Comparison out;
    out.task = bundles[0].aggregate.at("task").get<std::string>();
    out.split = bundles[0].aggregate.at("split").get<std::string>();
    const auto& ids = bundles[0].aggregate.at("evaluated_ids");
    for (std::size_t i = 1; i < bundles.size(); ++i) {
        const auto& a = bundles[i].aggregate;
        if (a.at("task") != out.task || a.at("split") != out.split) {
            throw DataError("report " + std::to_string(i) + " covers " + a.at("task").get<std::string>() + "/" +
                            a.at("split").get<std::string>() + ", not " + out.task + "/" + out.split);
        }
        if (a.at("evaluated_ids") != ids) {
            throw DataError("report " + std::to_string(i) + " evaluated a different set of instances");
        }
    }
    const bool eae = is_eae(parse_task_kind(out.task));
    out.metrics = eae ? std::vector<std::string>{"Arg-I", "Arg-C"} : std::vector<std::string>{"Accuracy"};
    out.baseline = baseline;
    for (const auto& b : bundles) out.rows.push_back({method_name(b), metric_values(b, eae), {}});
    const auto base = out.rows[baseline].values;
    for (auto& row : out.rows) {
        for (std::size_t m = 0; m < row.values.size(); ++m) row.deltas.push_back(row.values[m] - base[m]);
    }
    return out;
}

Format parse_format(std::string_view name) {
    const auto n = util::to_lower(util::trim(name));
    if (n == "table") return Format::Table;
    if (n == "markdown" || n == "md") return Format::Markdown;
    throw ConfigError("unknown format '" + std::string(name) + "' (expected table or markdown)");
}

std::string format_comparison(const Comparison& cmp, Format format) {
    std::vector<std::string> header{"Method"};
    for (const auto& m : cmp.metrics) {
        header.push_back(m);
        header.push_back("Δ " + m);
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < cmp.rows.size(); ++r) {
        const auto& row = cmp.rows[r];
        std::vector<std::string> cells{row.method + (r == cmp.baseline ? " [baseline]" : "")};
        for (std::size_t m = 0; m < row.values.size(); ++m) {
            cells.push_back(two_decimals(row.values[m]));
            cells.push_back(r == cmp.baseline ? "-" : format_delta(row.deltas[m]));
        }
        rows.push_back(std::move(cells));
    }
    std::ostringstream os;
    os << cmp.task << " (" << cmp.split << ")\n";
    if (format == Format::Markdown) {
        os << "| " << util::join(header, " | ") << " |\n|";
        for (std::size_t i = 0; i < header.size(); ++i) os << (i == 0 ? "---|" : "---:|");
        os << "\n";
        for (const auto& r : rows) os << "| " << util::join(r, " | ") << " |\n";
        return os.str();
    }
    std::vector<std::size_t> width(header.size());
    auto visible = [](const std::string& s) {
        std::size_t n = 0;
        for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
        return n;
    };
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = visible(header[i]);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], visible(r[i]));
    }
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            os << cells[i] << std::string(width[i] - visible(cells[i]) + (i + 1 < cells.size() ? 2 : 0), ' ');
        }
        os << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return os.str();
}

std::string format_report(const ReportBundle& b, Format format) {
    const auto& a = b.aggregate;
    const bool eae = is_eae(parse_task_kind(a.at("task").get<std::string>()));
    std::ostringstream os;
    const std::string method = method_name(b);
    if (format == Format::Markdown) {
        os << "## " << method << " on " << a.at("task").get<std::string>() << " (" << a.at("split").get<std::string>()
           << ")\n\n";
        os << "- instances: " << a.at("instances").get<std::size_t>() << " (failed: " << a.at("failed").get<std::size_t>()
           << ")\n";
        os << "- seed: " << a.at("seed").get<std::uint64_t>() << "\n\n";
        if (eae) {
            const auto& s = a.at("scores");
            os << "| Metric | P | R | F1 |\n|---|---:|---:|---:|\n";
            for (const char* m : {"arg_i", "arg_c"}) {
                os << "| " << (std::string(m) == "arg_i" ? "Arg-I" : "Arg-C") << " | "
                   << s.at(m).at("precision").get<std::string>() << " | " << s.at(m).at("recall").get<std::string>()
                   << " | " << s.at(m).at("f1").get<std::string>() << " |\n";
            }
        } else {
            os << "| Metric | Value |\n|---|---:|\n| Accuracy | " << a.at("scores").at("accuracy").get<std::string>()
               << " |\n";
        }
    } else {
        os << method << " on " << a.at("task").get<std::string>() << " (" << a.at("split").get<std::string>() << ")\n";
        os << "instances: " << a.at("instances").get<std::size_t>() << "  failed: " << a.at("failed").get<std::size_t>()
           << "  seed: " << a.at("seed").get<std::uint64_t>() << "\n";
        if (eae) {
            const auto& s = a.at("scores");
            for (const char* m : {"arg_i", "arg_c"}) {
                os << (std::string(m) == "arg_i" ? "Arg-I" : "Arg-C")
                   << "  P=" << s.at(m).at("precision").get<std::string>()
                   << "  R=" << s.at(m).at("recall").get<std::string>() << "  F1=" << s.at(m).at("f1").get<std::string>()
                   << "\n";
            }
        } else {
            os << "Accuracy  " << a.at("scores").at("accuracy").get<std::string>() << "\n";
        }
    }
    if (b.runtime.contains("cache_hit_rate")) {
        os << (format == Format::Markdown ? "\n" : "") << "cache hit rate: "
           << format_fraction(b.runtime.at("cache_hit_rate").get<double>()) << ", backend calls: "
           << b.runtime.at("backend_calls").get<std::uint64_t>() << "\n";
    }
    return os.str();
}

}  // namespace hdloa::experiment
