#include "hdloa/core.hpp"

#include "hdloa/error.hpp"
#include "hdloa/util.hpp"

#include <algorithm>
#include <set>

namespace hdloa {

std::string_view to_string(TaskKind task) {
    switch (task) {
        case TaskKind::EaeRams: return "rams";
        case TaskKind::EaeDocee: return "docee";
        case TaskKind::Sentiment: return "sst2";
        case TaskKind::Nli: return "snli";
    }
    return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
    const std::string n = util::to_lower(util::trim(name));
    if (n == "rams" || n == "eae_rams") return TaskKind::EaeRams;
    if (n == "docee" || n == "eae_docee") return TaskKind::EaeDocee;
    if (n == "sst2" || n == "sst-2" || n == "sentiment") return TaskKind::Sentiment;
    if (n == "snli" || n == "nli") return TaskKind::Nli;
    throw ConfigError("unknown task kind: '" + std::string(name) + "'");
}

bool is_eae(TaskKind task) {
    return task == TaskKind::EaeRams || task == TaskKind::EaeDocee;
}

const std::vector<std::string>& label_set(TaskKind task) {
    static const std::vector<std::string> kNone;
    static const std::vector<std::string> kSentiment{"positive", "negative"};
    static const std::vector<std::string> kNli{"yes", "no", "it is not possible to tell"};
    switch (task) {
        case TaskKind::Sentiment: return kSentiment;
        case TaskKind::Nli: return kNli;
        default: return kNone;
    }
}

std::size_t minimal_exemplar_count(TaskKind task) {
    switch (task) {
        case TaskKind::Sentiment: return 2;
        case TaskKind::Nli: return 3;
        default: return 1;
    }
}

std::size_t default_max_answers(TaskKind task) {
    return task == TaskKind::EaeDocee ? 3 : 1;
}

std::vector<std::string> validate_instance(const EAEInstance& inst) {
    std::vector<std::string> out;
    if (inst.id.empty()) out.emplace_back("id is empty");
    if (inst.event_type.empty()) out.emplace_back("event_type is empty");
    if (inst.roles.empty()) out.emplace_back("roles is empty");

    std::set<std::string> seen;
    for (const auto& r : inst.roles) {
        if (r.empty()) out.emplace_back("roles contains an empty name");
        else if (!seen.insert(r).second) out.emplace_back("role '" + r + "' listed twice");
    }

    if (inst.trigger) {
        const Trigger& t = *inst.trigger;
        if (t.char_start > t.char_end || t.char_end > inst.document.size()) {
            out.emplace_back("trigger offsets [" + std::to_string(t.char_start) + ", " + std::to_string(t.char_end) +
                             ") fall outside the document");
        } else {
            const auto slice = inst.document.substr(t.char_start, t.char_end - t.char_start);
            if (util::collapse_whitespace(slice) != util::collapse_whitespace(t.text)) {
                out.emplace_back("trigger text '" + t.text + "' does not match document text '" + slice + "'");
            }
        }
    }

    for (const auto& [role, spans] : inst.gold) {
        if (!seen.contains(role)) out.emplace_back("gold role '" + role + "' is not in roles");
        if (spans.empty()) out.emplace_back("gold role '" + role + "' has an empty span set");
        for (const auto& s : spans) {
            if (util::iequals(util::trim(s), kNotSpecified)) {
                out.emplace_back("gold role '" + role + "' contains the \"not specified\" sentinel");
            } else if (util::trim(s).empty()) {
                out.emplace_back("gold role '" + role + "' contains an empty span");
            }
        }
    }
    return out;
}

std::vector<std::string> validate_instance(const ClassificationInstance& inst, TaskKind task) {
    std::vector<std::string> out;
    if (inst.id.empty()) out.emplace_back("id is empty");
    if (inst.text.empty()) out.emplace_back("text is empty");
    if (task == TaskKind::Nli && inst.hypothesis.empty()) out.emplace_back("hypothesis is empty");
    const auto& labels = label_set(task);
    if (std::find(labels.begin(), labels.end(), inst.gold_label) == labels.end()) {
        out.emplace_back("gold_label '" + inst.gold_label + "' is not a " + std::string(to_string(task)) + " label");
    }
    return out;
}

std::string_view to_string(Provenance p) {
    return p == Provenance::Manual ? "manual" : "generated";
}

Provenance parse_provenance(std::string_view name) {
    if (util::iequals(name, "manual")) return Provenance::Manual;
    if (util::iequals(name, "generated")) return Provenance::Generated;
    throw DataError("unknown heuristic provenance: '" + std::string(name) + "'");
}

HeuristicSet::HeuristicSet(std::vector<Heuristic> items, std::string base_role)
    : items_(std::move(items)), base_role_(std::move(base_role)) {
    std::set<std::string> labels;
    std::set<int> indices;
    for (const auto& h : items_) {
        if (util::trim(h.label).empty()) throw PreconditionError("heuristic label is empty");
        if (util::trim(h.body).empty()) throw PreconditionError("heuristic '" + h.label + "' has an empty body");
        if (h.generation_index < 0) throw PreconditionError("heuristic '" + h.label + "' has a negative generation_index");
        if (!labels.insert(util::to_lower(util::trim(h.label))).second) {
            throw PreconditionError("duplicate heuristic label: '" + h.label + "'");
        }
        if (!indices.insert(h.generation_index).second) {
            throw PreconditionError("duplicate generation_index " + std::to_string(h.generation_index));
        }
        if (h.eval_accuracy && (*h.eval_accuracy < 0.0 || *h.eval_accuracy > 1.0)) {
            throw PreconditionError("heuristic '" + h.label + "' has eval_accuracy outside [0, 1]");
        }
    }
}

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
    tp_i += o.tp_i;
    fp_i += o.fp_i;
    fn_i += o.fn_i;
    tp_c += o.tp_c;
    fp_c += o.fp_c;
    fn_c += o.fn_c;
    return *this;
}

Prf prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    Prf out;
    if (tp + fp > 0) out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double denom = out.precision + out.recall;
    out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
    return out;
}

EAEScores EAEScores::from_counts(const MatchCounts& counts) {
    EAEScores s;
    s.counts = counts;
    s.arg_i = prf_from_counts(counts.tp_i, counts.fp_i, counts.fn_i);
    s.arg_c = prf_from_counts(counts.tp_c, counts.fp_c, counts.fn_c);
    return s;
}

}  // namespace hdloa
