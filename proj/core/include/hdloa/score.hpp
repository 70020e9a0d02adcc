#pragma once

#include "hdloa/core.hpp"
#include "hdloa/json_io.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace hdloa::score {

struct MatchPolicy {
    bool strip_articles = true;
    bool strip_leading_prepositions = true;
    bool case_fold = true;
    // Whitespace runs are always collapsed; not configurable.
    static constexpr bool whitespace_collapse = true;

    friend bool operator==(const MatchPolicy&, const MatchPolicy&) = default;
};

// "default" (everything on) or "exact" (whitespace collapse only).
MatchPolicy parse_policy(std::string_view name);
Json to_json(const MatchPolicy& policy);

// Prepositions removed from the start of a span: of, to, in, on, at, by, for,
// from, with.
const std::vector<std::string>& leading_prepositions();

// Collapses whitespace, optionally case-folds (ASCII), then repeatedly drops
// a leading article (a, an, the) or preposition while more than one word
// remains. Idempotent.
std::string normalize_span(std::string_view text, const MatchPolicy& policy = {});

struct PredictionRecord {
    std::string instance_id;
    RolePredictions predictions;
};

// Greedy one-to-one matching inside one instance: predictions are visited in
// role order then list order and each takes the first unmatched gold span
// that normalizes equal (same role for Arg-C, any role for Arg-I). Throws
// PreconditionError for predicted roles the instance does not define.
MatchCounts count_instance(const EAEInstance& inst, const RolePredictions& pred, const MatchPolicy& policy);

// Micro-averaged over instances. Instances without a prediction record count
// every gold span as a miss. Throws DataError for records whose instance id
// is unknown or repeated.
EAEScores score_eae(std::span<const EAEInstance> instances, std::span<const PredictionRecord> predictions,
                    const MatchPolicy& policy = {});

struct RoleCounts {
    std::int64_t tp = 0, fp = 0, fn = 0;
};

struct ScoreReport {
    EAEScores overall;
    MatchPolicy policy;
    std::size_t instances = 0;
    std::map<std::string, RoleCounts> per_role;  // Arg-C counts by role
    // Instances where one normalized gold string fills more than one role;
    // Arg-I credits such a string once.
    std::vector<std::string> shared_gold_instances;
};

ScoreReport score_eae_report(std::span<const EAEInstance> instances, std::span<const PredictionRecord> predictions,
                             const MatchPolicy& policy = {});
Json to_json(const ScoreReport& report);
std::string format_report_table(const ScoreReport& report);

struct LabelPair {
    std::string gold;
    std::optional<std::string> predicted;  // nullopt: the output did not parse
};

// correct / total; parse failures count as wrong. Throws PreconditionError on
// empty input.
double score_classification(std::span<const LabelPair> pairs);

struct SeenUnseenScores {
    EAEScores seen;
    EAEScores unseen;
    std::size_t seen_pairs = 0;    // (instance, role) pairs in each partition
    std::size_t unseen_pairs = 0;
};

// Partitions (instance, role) pairs by whether the role was demonstrated in
// the prompt's exemplars and scores each side on its own.
SeenUnseenScores seen_unseen_breakdown(std::span<const EAEInstance> instances,
                                       std::span<const PredictionRecord> predictions,
                                       const std::set<std::string>& exemplar_roles, const MatchPolicy& policy = {});

}  // namespace hdloa::score
