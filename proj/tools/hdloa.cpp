#include "hdloa/data.hpp"
#include "hdloa/error.hpp"
#include "hdloa/experiment.hpp"
#include "hdloa/heuristics.hpp"
#include "hdloa/json_io.hpp"
#include "hdloa/llm.hpp"
#include "hdloa/parse.hpp"
#include "hdloa/probe.hpp"
#include "hdloa/promptkit.hpp"
#include "hdloa/score.hpp"
#include "hdloa/util.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace hdloa;

namespace {

// Where completions come from for the subcommands that talk to a model.
struct BackendOpts {
    std::string config;
    std::string mock;
    std::string model = "mock";
    std::string cache_dir;
    std::size_t max_parallel = 4;
};

void add_backend_opts(CLI::App* sub, BackendOpts& o) {
    sub->add_option("--config", o.config, "Run config supplying backend, model and cache");
    sub->add_option("--mock", o.mock, "Mock script (instead of --config)");
    sub->add_option("--model", o.model, "Model id when using --mock");
    sub->add_option("--cache-dir", o.cache_dir, "Response cache directory");
    sub->add_option("--max-parallel", o.max_parallel, "Concurrent requests");
}

struct Session {
    std::unique_ptr<llm::Client> client;
    llm::CompletionRequest request;
    std::optional<experiment::RunConfig> config;
};

Session open_session(const BackendOpts& o) {
    Session s;
    llm::ClientOptions copts;
    copts.max_parallel = o.max_parallel;
    if (!o.cache_dir.empty()) copts.cache_dir = fs::path(o.cache_dir);
    std::shared_ptr<llm::Backend> backend;
    if (!o.config.empty()) {
        s.config = experiment::load_run_config(o.config);
        backend = experiment::make_backend(s.config->backend);
        s.request.model_id = s.config->model_id;
        s.request.temperature = s.config->temperature;
        s.request.max_tokens = s.config->max_tokens;
        s.request.stop_sequences = s.config->stop_sequences;
        if (!copts.cache_dir) copts.cache_dir = s.config->cache_dir;
        copts.max_parallel = s.config->max_parallel;
    } else if (!o.mock.empty()) {
        backend = std::make_shared<llm::MockBackend>(llm::MockScript::load(o.mock));
        s.request.model_id = o.model;
    } else {
        throw ConfigError("a model backend is needed: pass --config or --mock");
    }
    s.client = std::make_unique<llm::Client>(std::move(backend), copts);
    return s;
}

prompt::TemplateStore open_store(const std::string& dir, const Session* session = nullptr) {
    if (!dir.empty()) return prompt::TemplateStore(dir);
    if (session && session->config && session->config->template_dir) return prompt::TemplateStore(*session->config->template_dir);
    return prompt::TemplateStore();
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << "\n";
    } else {
        util::write_file_atomic(out, text.back() == '\n' ? text : text + "\n");
    }
}

Json parse_json_line(const std::string& line, const fs::path& path, std::size_t lineno) {
    try {
        return Json::parse(line);
    } catch (const Json::parse_error& e) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
}

template <typename Fn>
void for_each_line(const fs::path& path, Fn fn) {
    if (!fs::exists(path)) throw DataError("file not found: " + path.string());
    const auto lines = util::split_lines(util::read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (util::trim(lines[i]).empty()) continue;
        fn(parse_json_line(lines[i], path, i + 1), i + 1);
    }
}

// {id, question, answer, category}
std::vector<probe::PoolExample> load_pool(const fs::path& path) {
    std::vector<probe::PoolExample> out;
    for_each_line(path, [&](const Json& j, std::size_t lineno) {
        try {
            probe::PoolExample p;
            p.id = j.at("id").get<std::string>();
            p.exemplar.question = j.at("question").get<std::string>();
            p.exemplar.answer = j.at("answer").get<std::string>();
            p.category = probe::parse_category(j.value("category", std::string("Other")));
            out.push_back(std::move(p));
        } catch (const Json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    });
    return out;
}

// "Q: ..." starts an example, "A: ..." its answer; other lines continue the
// current field. "example N" header lines are skipped.
std::vector<prompt::Exemplar> read_qa_blocks(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("file not found: " + path.string());
    std::vector<prompt::Exemplar> out;
    std::string* field = nullptr;
    for (const auto& raw : util::split_lines(util::read_file(path))) {
        const std::string line = util::trim(raw);
        if (util::istarts_with(line, "Q:")) {
            out.emplace_back();
            out.back().question = util::trim(std::string_view(line).substr(2));
            field = &out.back().question;
        } else if (util::istarts_with(line, "A:") && !out.empty()) {
            out.back().answer = util::trim(std::string_view(line).substr(2));
            field = &out.back().answer;
        } else if (line.empty() || util::istarts_with(line, "example ")) {
            field = nullptr;
        } else if (field) {
            *field += "\n" + line;
        }
    }
    if (out.empty()) throw DataError(path.string() + ": no 'Q:' examples found");
    return out;
}

// Either one record per instance {instance_id, predictions: {role: [spans]}}
// or one per role {instance_id, role, spans}; per-role records of the same
// instance are merged.
std::vector<score::PredictionRecord> load_predictions(const fs::path& path) {
    std::vector<score::PredictionRecord> out;
    std::map<std::string, std::size_t> index;
    for_each_line(path, [&](const Json& j, std::size_t lineno) {
        try {
            const auto id = j.contains("instance_id") ? j.at("instance_id").get<std::string>() : j.at("id").get<std::string>();
            auto [it, fresh] = index.emplace(id, out.size());
            if (fresh) out.push_back({id, {}});
            auto& per_role = out[it->second].predictions.per_role;
            if (j.contains("role")) {
                per_role[j.at("role").get<std::string>()] = j.at("spans").get<std::vector<std::string>>();
                return;
            }
            if (!fresh) throw DataError("instance '" + id + "' appears twice");
            for (const auto& [role, spans] : j.at("predictions").items()) {
                per_role[role] = spans.get<std::vector<std::string>>();
            }
        } catch (const Json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    });
    return out;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const PreconditionError*>(&e)) return 1;
    if (dynamic_cast<const DataError*>(&e)) return 2;
    if (dynamic_cast<const BackendError*>(&e) || dynamic_cast<const ParseError*>(&e)) return 3;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HD-LoA prompting toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hdloa 0.1.0");

    // data validate
    auto* data_cmd = app.add_subcommand("data", "Dataset utilities")->require_subcommand(1);
    std::string d_task, d_path;
    std::optional<std::size_t> d_expect;
    auto* data_validate = data_cmd->add_subcommand("validate", "Check a canonical dataset file");
    data_validate->add_option("--task", d_task, "rams|docee|sst2|snli")->required();
    data_validate->add_option("--path", d_path, "Line-delimited records")->required();
    data_validate->add_option("--expect", d_expect, "Expected record count");
    data_validate->callback([&] {
        data::DatasetManifest m{parse_task_kind(d_task), d_path, data::Split::Test, d_expect};
        const std::size_t n = is_eae(m.task) ? data::load_eae(m).size() : data::load_classification(m).size();
        std::cout << d_path << ": " << n << " valid " << to_string(m.task) << " record(s)\n";
    });

    // llm ping | cache-stats
    auto* llm_cmd = app.add_subcommand("llm", "Model backend utilities")->require_subcommand(1);
    BackendOpts ping_opts;
    std::string ping_prompt = "ping";
    auto* llm_ping = llm_cmd->add_subcommand("ping", "Send one prompt and print the reply");
    add_backend_opts(llm_ping, ping_opts);
    llm_ping->add_option("--prompt", ping_prompt, "Prompt text");
    llm_ping->callback([&] {
        auto s = open_session(ping_opts);
        s.request.prompt = ping_prompt;
        const auto r = s.client->complete(s.request);
        std::cout << "backend: " << r.backend_id << (r.cached ? " (cached)" : "") << "  latency_ms: " << r.latency_ms
                  << "\n"
                  << r.text << "\n";
    });
    std::string cs_dir;
    auto* llm_stats = llm_cmd->add_subcommand("cache-stats", "Summarize a response cache");
    llm_stats->add_option("--cache-dir", cs_dir, "Cache directory")->required();
    llm_stats->callback([&] {
        const llm::ResponseCache cache(cs_dir);
        const auto st = cache.stats();
        std::cout << "entries: " << st.entries << "\nbytes: " << st.bytes << "\n";
    });

    // heuristics generate | select
    auto* heur_cmd = app.add_subcommand("heuristics", "Generate and select heuristics")->require_subcommand(1);
    BackendOpts gen_opts;
    heuristics::GenerationParams gen_params;
    std::string gen_out, gen_templates;
    auto* heur_gen = heur_cmd->add_subcommand("generate", "Ask the model for n heuristics");
    add_backend_opts(heur_gen, gen_opts);
    heur_gen->add_option("--role", gen_params.base_role, "Base role");
    heur_gen->add_option("--n", gen_params.n, "Number of heuristics");
    heur_gen->add_option("--task-description", gen_params.task_description, "Task phrase in the prompt");
    heur_gen->add_option("--out", gen_out, "Output JSONL")->required();
    heur_gen->add_option("--templates", gen_templates, "Template directory");
    heur_gen->callback([&] {
        auto s = open_session(gen_opts);
        const auto store = open_store(gen_templates, &s);
        const auto set = heuristics::generate_heuristics(*s.client, store, gen_params, s.request);
        save_heuristics(gen_out, set.items());
        std::cout << "wrote " << set.size() << " heuristic(s) to " << gen_out << "\n";
    });

    BackendOpts sel_opts;
    std::string sel_candidates, sel_subset, sel_out, sel_task = "rams", sel_policy = "default", sel_templates;
    int sel_k = 3;
    std::uint64_t sel_seed = 0;
    std::optional<double> sel_fraction;
    std::optional<std::size_t> sel_max_answers;
    std::string sel_base_role = "giver";
    auto* heur_sel = heur_cmd->add_subcommand("select", "Score each heuristic alone and keep the top k");
    add_backend_opts(heur_sel, sel_opts);
    heur_sel->add_option("--candidates", sel_candidates, "Candidate heuristics JSONL")->required();
    heur_sel->add_option("--subset", sel_subset, "EAE records to evaluate on")->required();
    heur_sel->add_option("--fraction", sel_fraction, "Sample this fraction of --subset first");
    heur_sel->add_option("--task", sel_task, "rams|docee");
    heur_sel->add_option("--k", sel_k, "Heuristics to keep");
    heur_sel->add_option("--seed", sel_seed, "Sampling seed");
    heur_sel->add_option("--policy", sel_policy, "default|exact");
    heur_sel->add_option("--max-answers", sel_max_answers, "Answers kept per role");
    heur_sel->add_option("--base-role", sel_base_role, "Base role named in the prompt");
    heur_sel->add_option("--out", sel_out, "Ranked JSONL")->required();
    heur_sel->add_option("--templates", sel_templates, "Template directory");
    heur_sel->callback([&] {
        const auto task = parse_task_kind(sel_task);
        if (!is_eae(task)) throw ConfigError("heuristic selection is defined for EAE tasks only");
        auto s = open_session(sel_opts);
        const auto store = open_store(sel_templates, &s);
        const HeuristicSet set(load_heuristics(sel_candidates), sel_base_role);
        auto subset = data::load_eae({task, sel_subset, data::Split::Train, std::nullopt});
        if (sel_fraction) subset = data::sample_subset(subset, *sel_fraction, sel_seed);
        const auto exemplars =
            prompt::exemplars_for(store, prompt::load_demos(store, task), prompt::Style::HdLoa);
        auto evaluator = heuristics::make_llm_evaluator(*s.client, store, task, exemplars, s.request,
                                                        sel_max_answers.value_or(default_max_answers(task)),
                                                        sel_base_role);
        heuristics::SelectionOptions opts;
        opts.policy = score::parse_policy(sel_policy);
        opts.max_parallel = sel_opts.max_parallel;
        opts.seed = sel_seed;
        const auto ranked = heuristics::select_heuristics(set, subset, sel_k, evaluator, opts);
        save_heuristics(sel_out, ranked.ranked);
        for (const auto& ev : ranked.evaluations) {
            std::cout << format_fraction(ev.heuristic.eval_accuracy.value_or(0.0)) << "  " << ev.heuristic.label
                      << (ev.failed_instances.empty() ? "" : "  (" + std::to_string(ev.failed_instances.size()) + " failed)")
                      << "\n";
        }
        std::cout << "kept " << ranked.ranked.size() << " of " << set.size() << " on " << subset.size()
                  << " instance(s); wrote " << sel_out << "\n";
    });

    // prompt build
    auto* prompt_cmd = app.add_subcommand("prompt", "Prompt construction")->require_subcommand(1);
    std::string pb_task, pb_style = "hdloa", pb_heuristics = "default", pb_data, pb_target, pb_out, pb_ablation = "none",
                pb_templates, pb_base_role = "giver";
    auto* prompt_build = prompt_cmd->add_subcommand("build", "Render the prompt for one target instance");
    prompt_build->add_option("--task", pb_task, "rams|docee|sst2|snli")->required();
    prompt_build->add_option("--style", pb_style, "hdloa|cot|standard");
    prompt_build->add_option("--heuristics", pb_heuristics, "Heuristics JSONL, or 'default'");
    prompt_build->add_option("--data", pb_data, "Dataset holding the target")->required();
    prompt_build->add_option("--target-id", pb_target, "Instance id")->required();
    prompt_build->add_option("--ablation", pb_ablation, "none|no_heuristics|no_loa");
    prompt_build->add_option("--base-role", pb_base_role, "Base role named in the instruction");
    prompt_build->add_option("--templates", pb_templates, "Template directory");
    prompt_build->add_option("--out", pb_out, "Output file (stdout when absent)");
    prompt_build->callback([&] {
        const auto task = parse_task_kind(pb_task);
        const auto style = prompt::parse_style(pb_style);
        const auto ablation = prompt::parse_ablation(pb_ablation);
        if (style != prompt::Style::HdLoa && ablation != prompt::Ablation::None) {
            throw ConfigError("ablations only apply to the hdloa style");
        }
        const auto store = open_store(pb_templates);
        const auto exemplars = prompt::exemplars_for(store, prompt::load_demos(store, task), style, ablation);
        std::vector<Heuristic> hs;
        if (style == prompt::Style::HdLoa && ablation != prompt::Ablation::NoHeuristics) {
            hs = pb_heuristics == "default" ? prompt::load_default_heuristics(store, task) : load_heuristics(pb_heuristics);
        }
        const data::DatasetManifest m{task, pb_data, data::Split::Test, std::nullopt};
        auto build = [&](const auto& inst) {
            return style == prompt::Style::HdLoa
                       ? prompt::build_hdloa_prompt(store, task, hs, exemplars, inst, ablation, pb_base_role)
                       : prompt::build_baseline_prompt(store, style, task, exemplars, inst);
        };
        std::optional<std::string> rendered;
        if (is_eae(task)) {
            for (const auto& inst : data::load_eae(m)) {
                if (inst.id == pb_target) rendered = build(inst).rendered;
            }
        } else {
            for (const auto& inst : data::load_classification(m)) {
                if (inst.id == pb_target) rendered = build(inst).rendered;
            }
        }
        if (!rendered) throw DataError("no instance with id '" + pb_target + "' in " + pb_data);
        emit(pb_out, *rendered);
    });

    // score
    std::string sc_pred, sc_gold, sc_task = "rams", sc_policy = "default", sc_out, sc_format = "table";
    auto* score_cmd = app.add_subcommand("score", "Arg-I / Arg-C scores for EAE predictions");
    score_cmd->add_option("--pred", sc_pred, "Predictions JSONL {instance_id, predictions}")->required();
    score_cmd->add_option("--gold", sc_gold, "Gold EAE records")->required();
    score_cmd->add_option("--task", sc_task, "rams|docee");
    score_cmd->add_option("--policy", sc_policy, "default|exact");
    score_cmd->add_option("--format", sc_format, "table|json");
    score_cmd->add_option("--out", sc_out, "Output file (stdout when absent)");
    score_cmd->callback([&] {
        const auto task = parse_task_kind(sc_task);
        if (!is_eae(task)) throw ConfigError("score handles EAE tasks; classification accuracy is in run reports");
        const auto gold = data::load_eae({task, sc_gold, data::Split::Test, std::nullopt});
        const auto preds = load_predictions(sc_pred);
        const auto report = score::score_eae_report(gold, preds, score::parse_policy(sc_policy));
        if (sc_format == "json") {
            emit(sc_out, score::to_json(report).dump(2));
        } else if (sc_format == "table") {
            emit(sc_out, score::format_report_table(report));
        } else {
            throw ConfigError("unknown format '" + sc_format + "' (expected table or json)");
        }
    });

    // probe identify | count | strategy | deduct | label | group-acc
    auto* probe_cmd = app.add_subcommand("probe", "Implicit-heuristic probes")->require_subcommand(1);
    BackendOpts id_opts;
    std::string id_prompt, id_templates;
    auto* probe_identify = probe_cmd->add_subcommand("identify", "Name the heuristic behind each example");
    add_backend_opts(probe_identify, id_opts);
    probe_identify->add_option("--prompt", id_prompt, "File of 'Q:' / 'A:' examples")->required();
    probe_identify->add_option("--templates", id_templates, "Template directory");
    probe_identify->callback([&] {
        auto s = open_session(id_opts);
        const auto store = open_store(id_templates, &s);
        const auto examples = read_qa_blocks(id_prompt);
        const auto found = probe::identify_prompt_heuristics(*s.client, store, examples, s.request);
        for (const auto& h : found) {
            std::cout << "example " << h.example_index << ": " << h.category_label;
            if (!h.shared_with.empty()) {
                std::vector<std::string> links;
                for (int k : h.shared_with) links.push_back(std::to_string(k));
                std::cout << "  (shared with " << util::join(links, ", ") << ")";
            }
            std::cout << "\n";
        }
        std::cout << "distinct heuristics: " << probe::count_distinct_heuristics(found) << "\n";
    });

    std::string st_pool, st_mode, st_category, st_out;
    std::size_t st_n = 0;
    std::uint64_t st_seed = 0;
    auto* probe_strategy = probe_cmd->add_subcommand("strategy", "Pick single-, diverse- or random-heuristic examples");
    probe_strategy->add_option("--pool", st_pool, "Pool JSONL {id, question, answer, category}")->required();
    probe_strategy->add_option("--mode", st_mode, "single|diverse|random")->required();
    probe_strategy->add_option("--n", st_n, "Examples to pick")->required();
    probe_strategy->add_option("--seed", st_seed, "Selection seed");
    probe_strategy->add_option("--category", st_category, "Category for single mode");
    probe_strategy->add_option("--out", st_out, "Output file (stdout when absent)");
    probe_strategy->callback([&] {
        const auto pool = load_pool(st_pool);
        std::optional<probe::Category> cat;
        if (!st_category.empty()) cat = probe::parse_category(st_category);
        const auto sp = probe::build_strategy_prompt(pool, st_n, probe::parse_strategy(st_mode), st_seed, cat);
        std::vector<std::string> ids;
        for (const auto& e : sp.examples) ids.push_back(e.id + ":" + std::string(probe::to_string(e.category)));
        std::cerr << "strategy " << probe::to_string(sp.strategy) << ", seed " << sp.seed << ": "
                  << util::join(ids, " ") << "\n";
        emit(st_out, sp.rendered);
    });

    std::string dd_demo, dd_pool, dd_remove, dd_out;
    auto* probe_deduct = probe_cmd->add_subcommand("deduct", "Replace the example of one category with a repeat");
    probe_deduct->add_option("--demo", dd_demo, "Demonstration JSONL")->required();
    probe_deduct->add_option("--pool", dd_pool, "Replacement pool JSONL")->required();
    probe_deduct->add_option("--remove", dd_remove, "ER|Comp|KB|Def|Chron")->required();
    probe_deduct->add_option("--out", dd_out, "Output JSONL (stdout when absent)");
    probe_deduct->callback([&] {
        const auto out = probe::deduct_heuristic(load_pool(dd_demo), probe::parse_category(dd_remove), load_pool(dd_pool));
        std::string text;
        for (const auto& e : out) {
            text += Json{{"id", e.id},
                         {"question", e.exemplar.question},
                         {"answer", e.exemplar.answer},
                         {"category", std::string(probe::to_string(e.category))}}
                        .dump() +
                    "\n";
        }
        emit(dd_out, text);
    });

    BackendOpts lb_opts;
    std::string lb_samples, lb_aliases, lb_out, lb_templates;
    auto* probe_label = probe_cmd->add_subcommand("label", "Assign each sample to a heuristic category");
    add_backend_opts(probe_label, lb_opts);
    probe_label->add_option("--samples", lb_samples, "JSONL {id, question}")->required();
    probe_label->add_option("--aliases", lb_aliases, "Alias table (default: templates/probe/aliases.json)");
    probe_label->add_option("--templates", lb_templates, "Template directory");
    probe_label->add_option("--out", lb_out, "Group JSONL {sample_id, category}")->required();
    probe_label->callback([&] {
        auto s = open_session(lb_opts);
        const auto store = open_store(lb_templates, &s);
        const auto aliases =
            probe::AliasTable::load(lb_aliases.empty() ? store.path("probe", "aliases.json") : fs::path(lb_aliases));
        std::vector<probe::ProbeSample> samples;
        for_each_line(lb_samples, [&](const Json& j, std::size_t lineno) {
            try {
                samples.push_back({j.at("id").get<std::string>(), j.at("question").get<std::string>()});
            } catch (const Json::exception& e) {
                throw DataError(lb_samples + ":" + std::to_string(lineno) + ": " + e.what());
            }
        });
        const auto lab = probe::label_samples_by_heuristic(*s.client, store, samples, probe::taxonomy(), aliases,
                                                           s.request, lb_opts.max_parallel);
        std::string text;
        for (const auto& [cat, ids] : lab.groups) {
            for (const auto& id : ids) text += Json{{"sample_id", id}, {"category", std::string(probe::to_string(cat))}}.dump() + "\n";
            std::cout << probe::to_string(cat) << ": " << ids.size() << "\n";
        }
        for (const auto& d : lab.diagnostics) std::cerr << d << "\n";
        util::write_file_atomic(lb_out, text);
    });

    std::string ga_results, ga_groups;
    auto* probe_group = probe_cmd->add_subcommand("group-acc", "Accuracy per heuristic group");
    probe_group->add_option("--results", ga_results, "JSONL {sample_id, correct}")->required();
    probe_group->add_option("--groups", ga_groups, "JSONL {sample_id, category}")->required();
    probe_group->callback([&] {
        const auto results = probe::load_results(ga_results);
        const auto acc = probe::grouped_accuracy(results, probe::load_groups(ga_groups));
        for (const auto& [cat, value] : acc) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.1f", value * 100.0);
            std::cout << probe::to_string(cat) << "\t" << buf << "\n";
        }
    });

    // run | compare | report
    std::string run_config;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file");
    run_cmd->add_option("--config", run_config, "Run config (JSON)")->required();
    run_cmd->callback([&] {
        const auto cfg = experiment::load_run_config(run_config);
        const auto bundle = experiment::run_experiment(cfg);
        std::cout << experiment::format_report(bundle, experiment::Format::Table);
        if (!cfg.output) std::cout << bundle.to_json().dump(2) << "\n";
    });

    std::vector<std::string> cmp_reports;
    std::size_t cmp_baseline = 0;
    std::string cmp_format = "table";
    auto* cmp_cmd = app.add_subcommand("compare", "Compare reports against a baseline");
    cmp_cmd->add_option("reports", cmp_reports, "Report files")->required();
    cmp_cmd->add_option("--baseline", cmp_baseline, "Index of the baseline report");
    cmp_cmd->add_option("--format", cmp_format, "table|markdown");
    cmp_cmd->callback([&] {
        std::vector<experiment::ReportBundle> bundles;
        for (const auto& p : cmp_reports) bundles.push_back(experiment::ReportBundle::load(p));
        const auto cmp = experiment::compare_runs(bundles, cmp_baseline);
        std::cout << experiment::format_comparison(cmp, experiment::parse_format(cmp_format));
    });

    std::string rp_file, rp_format = "table";
    auto* report_cmd = app.add_subcommand("report", "Print one report");
    report_cmd->add_option("report", rp_file, "Report file")->required();
    report_cmd->add_option("--format", rp_format, "table|markdown");
    report_cmd->callback([&] {
        std::cout << experiment::format_report(experiment::ReportBundle::load(rp_file), experiment::parse_format(rp_format));
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
