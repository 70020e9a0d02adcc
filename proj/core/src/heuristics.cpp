#include "hdloa/heuristics.hpp"

#include "hdloa/error.hpp"
#include "hdloa/json_io.hpp"
#include "hdloa/parse.hpp"
#include "hdloa/util.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <set>

namespace hdloa::heuristics {

namespace {

std::string strip_list_marker(std::string s) {
    std::size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) {
        s = util::trim(std::string_view(s).substr(i + 1));
    } else if (!s.empty() && (s[0] == '-' || s[0] == '*' || s[0] == '+') && s.size() > 1 && s[1] == ' ') {
        s = util::trim(std::string_view(s).substr(2));
    }
    return s;
}

std::string strip_bold(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), '*'), s.end());
    return util::trim(s);
}

}  // namespace

ParsedHeuristics parse_heuristic_lines(std::string_view text, bool strict) {
    static constexpr std::string_view kToken = "heuristic:";
    ParsedHeuristics out;
    for (const auto& raw : util::split_lines(text)) {
        const std::string line = util::trim(raw);
        if (line.empty()) continue;
        const std::string item = strip_list_marker(line);
        const auto pos = util::ifind(item, kToken);
        std::string label = pos == std::string::npos ? std::string{} : strip_bold(item.substr(0, pos));
        std::string body = pos == std::string::npos ? std::string{} : strip_bold(item.substr(pos + kToken.size()));
        if (label.empty() || body.empty()) {
            if (strict) throw ParseError("not a heuristic line: '" + line + "'");
            out.skipped.push_back(line);
            continue;
        }
        Heuristic h;
        h.label = std::move(label);
        h.body = std::move(body);
        h.provenance = Provenance::Generated;
        h.generation_index = static_cast<int>(out.items.size());
        out.items.push_back(std::move(h));
    }
    return out;
}

std::string generation_prompt(const prompt::TemplateStore& store, const GenerationParams& p) {
    if (p.n < 1) throw PreconditionError("heuristic generation needs n >= 1");
    if (p.base_role.empty()) throw PreconditionError("heuristic generation needs a base role");
    return prompt::fill_template(store.load("heuristics", "generate"),
                                 {{"n", std::to_string(p.n)},
                                  {"base_role", p.base_role},
                                  {"task_description", p.task_description},
                                  {"example", p.example}});
}

HeuristicSet generate_heuristics(llm::Client& client, const prompt::TemplateStore& store, const GenerationParams& p,
                                 const llm::CompletionRequest& request_template) {
    llm::CompletionRequest req = request_template;
    req.prompt = generation_prompt(store, p);
    const auto reply = client.complete(req);
    auto parsed = parse_heuristic_lines(reply.text);
    const auto want = static_cast<std::size_t>(p.n);
    if (parsed.items.size() < want) {
        throw ParseError("heuristic generation parsed " + std::to_string(parsed.items.size()) + " of " +
                         std::to_string(p.n) + " heuristics (" + std::to_string(parsed.skipped.size()) +
                         " line(s) skipped)");
    }
    parsed.items.resize(want);
    std::set<std::string> seen;
    for (const auto& h : parsed.items) {
        if (!seen.insert(util::to_lower(h.label)).second) {
            throw ParseError("heuristic generation returned duplicate label '" + h.label + "'");
        }
    }
    return HeuristicSet(std::move(parsed.items), p.base_role);
}

void rank_in_place(std::vector<Heuristic>& items) {
    std::sort(items.begin(), items.end(), [](const Heuristic& a, const Heuristic& b) {
        const double x = a.eval_accuracy.value_or(0.0);
        const double y = b.eval_accuracy.value_or(0.0);
        if (x != y) return x > y;
        return a.generation_index < b.generation_index;
    });
}

RankedHeuristics select_heuristics(const HeuristicSet& set, std::span<const EAEInstance> subset, int k,
                                   const SingleHeuristicEvaluator& evaluator, const SelectionOptions& options) {
    if (set.empty()) throw PreconditionError("heuristic selection needs at least one candidate");
    if (subset.empty()) throw PreconditionError("heuristic selection needs a non-empty evaluation subset");
    if (k < 1) throw PreconditionError("heuristic selection needs k >= 1");
    if (!evaluator) throw PreconditionError("heuristic selection needs an evaluator");

    const auto& candidates = set.items();
    const std::size_t n_inst = subset.size();
    // One slot per (heuristic, instance); filled concurrently, reduced after.
    std::vector<std::optional<RolePredictions>> results(candidates.size() * n_inst);
    util::parallel_for(results.size(), options.max_parallel, [&](std::size_t i) {
        try {
            results[i] = evaluator(candidates[i / n_inst], subset[i % n_inst]);
        } catch (const std::exception&) {
            results[i].reset();
        }
    });

    RankedHeuristics out;
    out.k = k;
    out.subset_size = n_inst;
    out.seed = options.seed;
    for (std::size_t h = 0; h < candidates.size(); ++h) {
        HeuristicEvaluation ev;
        ev.heuristic = candidates[h];
        std::vector<score::PredictionRecord> records;
        for (std::size_t j = 0; j < n_inst; ++j) {
            auto& slot = results[h * n_inst + j];
            if (!slot) {
                ev.failed_instances.push_back(subset[j].id);
                continue;  // absent record: every gold span counts as missed
            }
            // Drop roles the instance does not define rather than failing the
            // whole heuristic on one stray line.
            RolePredictions pred;
            for (const auto& role : subset[j].roles) {
                auto it = slot->per_role.find(role);
                if (it != slot->per_role.end()) pred.per_role[role] = it->second;
            }
            records.push_back({subset[j].id, std::move(pred)});
        }
        const auto report = score::score_eae_report(subset, records, options.policy);
        ev.scores = report.overall;
        ev.per_role = report.per_role;
        ev.heuristic.eval_accuracy = report.overall.arg_c.f1;
        out.evaluations.push_back(std::move(ev));
    }

    for (const auto& ev : out.evaluations) out.ranked.push_back(ev.heuristic);
    rank_in_place(out.ranked);
    if (out.ranked.size() > static_cast<std::size_t>(k)) out.ranked.resize(static_cast<std::size_t>(k));
    return out;
}

std::string single_heuristic_prompt(const prompt::TemplateStore& store, TaskKind task,
                                    const std::vector<prompt::Exemplar>& exemplars, const Heuristic& h,
                                    const EAEInstance& target, const std::string& base_role) {
    const std::vector<Heuristic> one{h};
    return prompt::build_hdloa_prompt(store, task, one, exemplars, target, prompt::Ablation::None, base_role).rendered;
}

SingleHeuristicEvaluator make_llm_evaluator(llm::Client& client, const prompt::TemplateStore& store, TaskKind task,
                                            std::vector<prompt::Exemplar> exemplars,
                                            llm::CompletionRequest request_template, std::size_t max_answers,
                                            std::string base_role) {
    return [&client, &store, task, exemplars = std::move(exemplars), request_template = std::move(request_template),
            max_answers, base_role = std::move(base_role)](const Heuristic& h, const EAEInstance& target) {
        llm::CompletionRequest req = request_template;
        req.prompt = single_heuristic_prompt(store, task, exemplars, h, target, base_role);
        auto reply = client.complete(req);
        auto parsed = parse::parse_eae_output(reply.text, target.roles, max_answers);
        return std::move(parsed.predictions);
    };
}

Json to_json(const RankedHeuristics& r) {
    Json j;
    j["k"] = r.k;
    j["subset_size"] = r.subset_size;
    j["seed"] = r.seed;
    j["ranked"] = Json::array();
    for (const auto& h : r.ranked) j["ranked"].push_back(to_json(h));
    j["evaluations"] = Json::array();
    for (const auto& ev : r.evaluations) {
        Json e;
        e["heuristic"] = to_json(ev.heuristic);
        e["scores"] = to_json(ev.scores);
        Json roles = Json::object();
        for (const auto& [role, c] : ev.per_role) roles[role] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
        e["per_role"] = std::move(roles);
        e["failed_instances"] = ev.failed_instances;
        j["evaluations"].push_back(std::move(e));
    }
    return j;
}

}  // namespace hdloa::heuristics
