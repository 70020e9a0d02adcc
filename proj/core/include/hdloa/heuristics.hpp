#pragma once

#include "hdloa/core.hpp"
#include "hdloa/llm.hpp"
#include "hdloa/promptkit.hpp"
#include "hdloa/score.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hdloa::heuristics {

struct ParsedHeuristics {
    std::vector<Heuristic> items;
    std::vector<std::string> skipped;  // non-blank lines that did not match
};

// One heuristic per `<Label> heuristic: <body>` line. The label is everything
// before the first case-insensitive "heuristic:"; list markers ("1.", "-",
// "*") and surrounding bold markers are ignored. generation_index is the
// ordinal among parsed lines. With `strict`, any skipped line is a ParseError.
ParsedHeuristics parse_heuristic_lines(std::string_view text, bool strict = false);

inline constexpr std::string_view kDefaultTaskDescription = "the event argument extraction task";
inline constexpr std::string_view kDefaultExampleHeuristic =
    "Semantic heuristic: The 'giver' is identified as the individual, group, or organization mentioned in the "
    "document that is responsible for providing a gift or grant.";

struct GenerationParams {
    std::string task_description{kDefaultTaskDescription};
    std::string base_role = "giver";
    int n = 10;
    std::string example{kDefaultExampleHeuristic};
};

// Text of templates/heuristics/generate.txt with the parameters filled in.
std::string generation_prompt(const prompt::TemplateStore& store, const GenerationParams& params);

// Sends the generation prompt and parses the reply into exactly n generated
// heuristics (extra lines beyond n are dropped). Throws PreconditionError for
// n < 1 and ParseError ("parsed 9 of 10") on a short or duplicated reply.
HeuristicSet generate_heuristics(llm::Client& client, const prompt::TemplateStore& store,
                                 const GenerationParams& params, const llm::CompletionRequest& request_template);

// Everything measured for one candidate during selection.
struct HeuristicEvaluation {
    Heuristic heuristic;  // eval_accuracy set
    EAEScores scores;
    std::map<std::string, score::RoleCounts> per_role;
    std::vector<std::string> failed_instances;  // scored as zero credit
};

struct RankedHeuristics {
    std::vector<Heuristic> ranked;               // top k
    std::vector<HeuristicEvaluation> evaluations;  // every candidate, input order
    int k = 3;
    std::size_t subset_size = 0;
    std::uint64_t seed = 0;
};

// Single-heuristic pipeline: prompt with one heuristic, complete, parse.
// Throwing marks the instance as failed for that heuristic.
using SingleHeuristicEvaluator = std::function<RolePredictions(const Heuristic&, const EAEInstance&)>;

struct SelectionOptions {
    score::MatchPolicy policy;
    std::size_t max_parallel = 4;
    std::uint64_t seed = 0;  // echoed; the subset is drawn by the caller
};

// Scores each heuristic on its own by Arg-C F1 over the subset, then keeps the
// best k (accuracy descending, generation_index ascending).
RankedHeuristics select_heuristics(const HeuristicSet& set, std::span<const EAEInstance> subset, int k,
                                   const SingleHeuristicEvaluator& evaluator, const SelectionOptions& options = {});

// Sort order used by selection; stable under input permutation.
void rank_in_place(std::vector<Heuristic>& items);

// Evaluator backed by the LLM client: an HD-LoA prompt holding just `h` and
// the task's exemplar, parsed with `max_answers`.
SingleHeuristicEvaluator make_llm_evaluator(llm::Client& client, const prompt::TemplateStore& store, TaskKind task,
                                            std::vector<prompt::Exemplar> exemplars,
                                            llm::CompletionRequest request_template, std::size_t max_answers,
                                            std::string base_role = "giver");

// The exact prompt make_llm_evaluator sends for (h, target).
std::string single_heuristic_prompt(const prompt::TemplateStore& store, TaskKind task,
                                    const std::vector<prompt::Exemplar>& exemplars, const Heuristic& h,
                                    const EAEInstance& target, const std::string& base_role = "giver");

Json to_json(const RankedHeuristics& ranked);

}  // namespace hdloa::heuristics
