#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hdloa {

// Textual sentinel the prompts ask for when a role has no argument. It never
// appears as a gold span or as a parsed prediction.
inline constexpr std::string_view kNotSpecified = "not specified";

enum class TaskKind { EaeRams, EaeDocee, Sentiment, Nli };

// "rams", "docee", "sst2", "snli"
std::string_view to_string(TaskKind task);
// Accepts the canonical names plus "sentiment" and "nli".
TaskKind parse_task_kind(std::string_view name);

bool is_eae(TaskKind task);
// Closed label set of a classification task, canonical casing. Empty for EAE.
const std::vector<std::string>& label_set(TaskKind task);

// Exemplars an HD-LoA prompt carries for the task: EAE 1, SA 2, NLI 3.
std::size_t minimal_exemplar_count(TaskKind task);

// Default per-role answer cap: RAMS 1, DocEE 3.
std::size_t default_max_answers(TaskKind task);

struct Trigger {
    std::string text;
    // Byte offsets into the document, half-open: document[char_start, char_end).
    std::size_t char_start = 0;
    std::size_t char_end = 0;
};

struct EAEInstance {
    std::string id;
    std::string document;
    std::string event_type;
    std::optional<Trigger> trigger;  // DocEE has none
    std::vector<std::string> roles;
    // Role -> gold spans. A role without an argument is absent from the map.
    std::map<std::string, std::vector<std::string>> gold;
    std::string domain_tag;
};

// One entry per broken invariant; empty when the instance is well formed.
std::vector<std::string> validate_instance(const EAEInstance& inst);

struct ClassificationInstance {
    std::string id;
    std::string text;        // sentence, or the premise for NLI
    std::string hypothesis;  // NLI only
    std::string gold_label;
};

std::vector<std::string> validate_instance(const ClassificationInstance& inst, TaskKind task);

enum class Provenance { Generated, Manual };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view name);

struct Heuristic {
    std::string label;  // e.g. "Syntactic"
    std::string body;
    Provenance provenance = Provenance::Generated;
    int generation_index = 0;
    std::optional<double> eval_accuracy;
};

class HeuristicSet {
public:
    HeuristicSet() = default;
    // Throws PreconditionError on empty labels/bodies, case-insensitively
    // duplicated labels, or repeated generation indices.
    HeuristicSet(std::vector<Heuristic> items, std::string base_role);

    const std::vector<Heuristic>& items() const { return items_; }
    const std::string& base_role() const { return base_role_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

private:
    std::vector<Heuristic> items_;
    std::string base_role_;
};

struct RolePredictions {
    std::map<std::string, std::vector<std::string>> per_role;
    std::string raw_output;

    friend bool operator==(const RolePredictions&, const RolePredictions&) = default;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MatchCounts {
    std::int64_t tp_i = 0, fp_i = 0, fn_i = 0;
    std::int64_t tp_c = 0, fp_c = 0, fn_c = 0;

    MatchCounts& operator+=(const MatchCounts& o);
    friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); each is 0 on a zero
// denominator.
Prf prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn);

struct EAEScores {
    Prf arg_i;
    Prf arg_c;
    MatchCounts counts;

    static EAEScores from_counts(const MatchCounts& counts);
};

}  // namespace hdloa
