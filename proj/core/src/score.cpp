#include "hdloa/score.hpp"

#include "hdloa/error.hpp"
#include "hdloa/util.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace hdloa::score {

MatchPolicy parse_policy(std::string_view name) {
    const auto n = util::to_lower(util::trim(name));
    if (n == "default") return MatchPolicy{};
    if (n == "exact") return MatchPolicy{false, false, false};
    throw ConfigError("unknown match policy: '" + std::string(name) + "' (expected default or exact)");
}

Json to_json(const MatchPolicy& p) {
    return Json{{"strip_articles", p.strip_articles},
                {"strip_leading_prepositions", p.strip_leading_prepositions},
                {"case_fold", p.case_fold},
                {"whitespace_collapse", MatchPolicy::whitespace_collapse}};
}

const std::vector<std::string>& leading_prepositions() {
    static const std::vector<std::string> kList{"of", "to", "in", "on", "at", "by", "for", "from", "with"};
    return kList;
}

namespace {

bool is_article(std::string_view w) {
    return util::iequals(w, "a") || util::iequals(w, "an") || util::iequals(w, "the");
}

bool is_preposition(std::string_view w) {
    const auto& list = leading_prepositions();
    return std::any_of(list.begin(), list.end(), [&](const std::string& p) { return util::iequals(w, p); });
}

}  // namespace

std::string normalize_span(std::string_view text, const MatchPolicy& policy) {
    std::string s = util::collapse_whitespace(text);
    if (policy.case_fold) s = util::to_lower(s);
    std::size_t start = 0;
    while (true) {
        const std::size_t space = s.find(' ', start);
        if (space == std::string::npos) break;  // keep the last word
        const std::string_view word(s.data() + start, space - start);
        const bool drop = (policy.strip_articles && is_article(word)) ||
                          (policy.strip_leading_prepositions && is_preposition(word));
        if (!drop) break;
        start = space + 1;
    }
    return s.substr(start);
}

namespace {

struct GoldSpan {
    const std::string* role;
    std::string norm;
};

void check_roles(const EAEInstance& inst, const RolePredictions& pred) {
    for (const auto& [role, spans] : pred.per_role) {
        if (std::find(inst.roles.begin(), inst.roles.end(), role) == inst.roles.end()) {
            throw PreconditionError("instance '" + inst.id + "': prediction for undefined role '" + role + "'");
        }
    }
}

// Shared by the plain and the per-role scorers. `keep_role` restricts the
// pairs considered (used by the seen/unseen split).
template <typename KeepRole>
MatchCounts count_filtered(const EAEInstance& inst, const RolePredictions& pred, const MatchPolicy& policy,
                           KeepRole keep_role, std::map<std::string, RoleCounts>* per_role = nullptr) {
    check_roles(inst, pred);
    std::vector<GoldSpan> gold;
    for (const auto& role : inst.roles) {
        if (!keep_role(role)) continue;
        auto it = inst.gold.find(role);
        if (it == inst.gold.end()) continue;
        for (const auto& g : it->second) gold.push_back({&role, normalize_span(g, policy)});
    }
    std::vector<char> used_i(gold.size(), 0), used_c(gold.size(), 0);
    MatchCounts c;
    std::int64_t preds = 0;
    for (const auto& role : inst.roles) {
        if (!keep_role(role)) continue;
        auto it = pred.per_role.find(role);
        if (it == pred.per_role.end()) continue;
        for (const auto& p : it->second) {
            ++preds;
            const std::string norm = normalize_span(p, policy);
            bool hit_c = false;
            for (std::size_t g = 0; g < gold.size(); ++g) {
                if (!used_c[g] && *gold[g].role == role && gold[g].norm == norm) {
                    used_c[g] = 1;
                    hit_c = true;
                    break;
                }
            }
            for (std::size_t g = 0; g < gold.size(); ++g) {
                if (!used_i[g] && gold[g].norm == norm) {
                    used_i[g] = 1;
                    ++c.tp_i;
                    break;
                }
            }
            if (hit_c) ++c.tp_c;
            if (per_role) {
                auto& rc = (*per_role)[role];
                (hit_c ? rc.tp : rc.fp) += 1;
            }
        }
    }
    const auto n_gold = static_cast<std::int64_t>(gold.size());
    c.fp_i = preds - c.tp_i;
    c.fn_i = n_gold - c.tp_i;
    c.fp_c = preds - c.tp_c;
    c.fn_c = n_gold - c.tp_c;
    if (per_role) {
        for (std::size_t g = 0; g < gold.size(); ++g) {
            if (!used_c[g]) (*per_role)[*gold[g].role].fn += 1;
        }
    }
    return c;
}

std::unordered_map<std::string, const RolePredictions*> index_predictions(
    std::span<const EAEInstance> instances, std::span<const PredictionRecord> predictions) {
    std::unordered_map<std::string, const EAEInstance*> by_id;
    for (const auto& inst : instances) by_id.emplace(inst.id, &inst);
    std::unordered_map<std::string, const RolePredictions*> out;
    for (const auto& rec : predictions) {
        if (!by_id.contains(rec.instance_id)) {
            throw DataError("prediction for unknown instance id '" + rec.instance_id + "'");
        }
        if (!out.emplace(rec.instance_id, &rec.predictions).second) {
            throw DataError("more than one prediction record for instance '" + rec.instance_id + "'");
        }
    }
    return out;
}

const RolePredictions& lookup(const std::unordered_map<std::string, const RolePredictions*>& idx, const std::string& id) {
    static const RolePredictions kEmpty;
    auto it = idx.find(id);
    return it == idx.end() ? kEmpty : *it->second;
}

}  // namespace

MatchCounts count_instance(const EAEInstance& inst, const RolePredictions& pred, const MatchPolicy& policy) {
    return count_filtered(inst, pred, policy, [](const std::string&) { return true; });
}

EAEScores score_eae(std::span<const EAEInstance> instances, std::span<const PredictionRecord> predictions,
                    const MatchPolicy& policy) {
    const auto idx = index_predictions(instances, predictions);
    MatchCounts total;
    for (const auto& inst : instances) total += count_instance(inst, lookup(idx, inst.id), policy);
    return EAEScores::from_counts(total);
}

ScoreReport score_eae_report(std::span<const EAEInstance> instances, std::span<const PredictionRecord> predictions,
                             const MatchPolicy& policy) {
    const auto idx = index_predictions(instances, predictions);
    ScoreReport report;
    report.policy = policy;
    report.instances = instances.size();
    MatchCounts total;
    for (const auto& inst : instances) {
        total += count_filtered(inst, lookup(idx, inst.id), policy, [](const std::string&) { return true; },
                                &report.per_role);
        std::map<std::string, std::set<std::string>> roles_by_norm;
        for (const auto& [role, spans] : inst.gold) {
            for (const auto& g : spans) roles_by_norm[normalize_span(g, policy)].insert(role);
        }
        if (std::any_of(roles_by_norm.begin(), roles_by_norm.end(), [](const auto& kv) { return kv.second.size() > 1; })) {
            report.shared_gold_instances.push_back(inst.id);
        }
    }
    report.overall = EAEScores::from_counts(total);
    return report;
}

Json to_json(const ScoreReport& report) {
    Json j = to_json(report.overall);
    j["instances"] = report.instances;
    j["policy"] = to_json(report.policy);
    Json roles = Json::object();
    for (const auto& [role, rc] : report.per_role) {
        const Prf p = prf_from_counts(rc.tp, rc.fp, rc.fn);
        roles[role] = {{"tp", rc.tp}, {"fp", rc.fp}, {"fn", rc.fn},
                       {"precision", format_fraction(p.precision)},
                       {"recall", format_fraction(p.recall)},
                       {"f1", format_fraction(p.f1)}};
    }
    j["per_role"] = std::move(roles);
    j["shared_gold_instances"] = report.shared_gold_instances;
    return j;
}

std::string format_report_table(const ScoreReport& report) {
    std::ostringstream os;
    const auto& s = report.overall;
    os << "instances: " << report.instances << "\n";
    os << "policy: strip_articles=" << report.policy.strip_articles
       << " strip_leading_prepositions=" << report.policy.strip_leading_prepositions
       << " case_fold=" << report.policy.case_fold << "\n\n";
    os << "metric  precision  recall  f1      tp    fp    fn\n";
    auto row = [&](const char* name, const Prf& p, std::int64_t tp, std::int64_t fp, std::int64_t fn) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-7s %-10s %-7s %-7s %-5lld %-5lld %lld\n", name,
                      format_fraction(p.precision).c_str(), format_fraction(p.recall).c_str(),
                      format_fraction(p.f1).c_str(), static_cast<long long>(tp), static_cast<long long>(fp),
                      static_cast<long long>(fn));
        os << buf;
    };
    row("Arg-I", s.arg_i, s.counts.tp_i, s.counts.fp_i, s.counts.fn_i);
    row("Arg-C", s.arg_c, s.counts.tp_c, s.counts.fp_c, s.counts.fn_c);
    if (!report.per_role.empty()) {
        os << "\nper role (Arg-C):\n";
        for (const auto& [role, rc] : report.per_role) {
            const Prf p = prf_from_counts(rc.tp, rc.fp, rc.fn);
            char buf[256];
            std::snprintf(buf, sizeof buf, "  %-28s f1=%s tp=%lld fp=%lld fn=%lld\n", role.c_str(),
                          format_fraction(p.f1).c_str(), static_cast<long long>(rc.tp),
                          static_cast<long long>(rc.fp), static_cast<long long>(rc.fn));
            os << buf;
        }
    }
    if (!report.shared_gold_instances.empty()) {
        os << "\ninstances with one gold string under several roles: "
           << util::join(report.shared_gold_instances, ", ") << "\n";
    }
    return os.str();
}

double score_classification(std::span<const LabelPair> pairs) {
    if (pairs.empty()) throw PreconditionError("score_classification: no pairs");
    std::size_t correct = 0;
    for (const auto& p : pairs) {
        if (p.predicted && *p.predicted == p.gold) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

SeenUnseenScores seen_unseen_breakdown(std::span<const EAEInstance> instances,
                                       std::span<const PredictionRecord> predictions,
                                       const std::set<std::string>& exemplar_roles, const MatchPolicy& policy) {
    const auto idx = index_predictions(instances, predictions);
    auto is_seen = [&](const std::string& role) {
        return std::any_of(exemplar_roles.begin(), exemplar_roles.end(),
                           [&](const std::string& r) { return util::iequals(r, role); });
    };
    SeenUnseenScores out;
    MatchCounts seen, unseen;
    for (const auto& inst : instances) {
        const auto& pred = lookup(idx, inst.id);
        seen += count_filtered(inst, pred, policy, is_seen);
        unseen += count_filtered(inst, pred, policy, [&](const std::string& r) { return !is_seen(r); });
        for (const auto& role : inst.roles) (is_seen(role) ? out.seen_pairs : out.unseen_pairs) += 1;
    }
    out.seen = EAEScores::from_counts(seen);
    out.unseen = EAEScores::from_counts(unseen);
    return out;
}

}  // namespace hdloa::score
