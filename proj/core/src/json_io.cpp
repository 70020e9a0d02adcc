#include "hdloa/json_io.hpp"

#include "hdloa/error.hpp"
#include "hdloa/util.hpp"

#include <cmath>
#include <cstdio>

namespace hdloa {

namespace {

const Json& require(const Json& j, const char* field) {
    if (!j.is_object()) throw DataError("record is not a JSON object");
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) throw DataError(std::string("missing field '") + field + "'");
    return *it;
}

std::string require_string(const Json& j, const char* field) {
    const Json& v = require(j, field);
    if (!v.is_string()) throw DataError(std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
}

std::size_t require_offset(const Json& j, const char* field) {
    const Json& v = require(j, field);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw DataError(std::string("field '") + field + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::vector<std::string> string_list(const Json& v, const std::string& field) {
    if (!v.is_array()) throw DataError("field '" + field + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw DataError("field '" + field + "' must be an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

}  // namespace

Json to_json(const EAEInstance& inst) {
    Json j;
    j["id"] = inst.id;
    j["document"] = inst.document;
    j["event_type"] = inst.event_type;
    if (inst.trigger) {
        j["trigger"] = {{"text", inst.trigger->text},
                        {"char_start", inst.trigger->char_start},
                        {"char_end", inst.trigger->char_end}};
    }
    j["roles"] = inst.roles;
    Json gold = Json::object();
    for (const auto& role : inst.roles) {
        if (auto it = inst.gold.find(role); it != inst.gold.end()) gold[role] = it->second;
    }
    for (const auto& [role, spans] : inst.gold) {
        if (!gold.contains(role)) gold[role] = spans;
    }
    j["gold"] = std::move(gold);
    if (!inst.domain_tag.empty()) j["domain_tag"] = inst.domain_tag;
    return j;
}

Json to_json(const ClassificationInstance& inst, TaskKind task) {
    Json j;
    j["id"] = inst.id;
    if (task == TaskKind::Nli) {
        j["premise"] = inst.text;
        j["hypothesis"] = inst.hypothesis;
    } else {
        j["text"] = inst.text;
    }
    j["gold_label"] = inst.gold_label;
    return j;
}

Json to_json(const Heuristic& h) {
    Json j;
    j["label"] = h.label;
    j["body"] = h.body;
    j["provenance"] = std::string(to_string(h.provenance));
    j["generation_index"] = h.generation_index;
    j["eval_accuracy"] = h.eval_accuracy ? Json(*h.eval_accuracy) : Json(nullptr);
    return j;
}

Json to_json(const EAEScores& s) {
    auto prf = [](const Prf& p) {
        return Json{{"precision", format_fraction(p.precision)},
                    {"recall", format_fraction(p.recall)},
                    {"f1", format_fraction(p.f1)}};
    };
    Json j;
    j["arg_i"] = prf(s.arg_i);
    j["arg_c"] = prf(s.arg_c);
    j["counts"] = {{"tp_i", s.counts.tp_i}, {"fp_i", s.counts.fp_i}, {"fn_i", s.counts.fn_i},
                   {"tp_c", s.counts.tp_c}, {"fp_c", s.counts.fp_c}, {"fn_c", s.counts.fn_c}};
    return j;
}

EAEInstance eae_instance_from_json(const Json& j) {
    EAEInstance inst;
    inst.id = require_string(j, "id");
    inst.document = require_string(j, "document");
    inst.event_type = require_string(j, "event_type");
    if (auto it = j.find("trigger"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw DataError("field 'trigger' must be an object");
        Trigger t;
        t.text = require_string(*it, "text");
        t.char_start = require_offset(*it, "char_start");
        t.char_end = require_offset(*it, "char_end");
        inst.trigger = std::move(t);
    }
    inst.roles = string_list(require(j, "roles"), "roles");
    const Json& gold = require(j, "gold");
    if (!gold.is_object()) throw DataError("field 'gold' must be an object of role -> [spans]");
    for (const auto& [role, spans] : gold.items()) {
        inst.gold[role] = string_list(spans, "gold." + role);
    }
    if (auto it = j.find("domain_tag"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw DataError("field 'domain_tag' must be a string");
        inst.domain_tag = it->get<std::string>();
    }
    return inst;
}

ClassificationInstance classification_instance_from_json(const Json& j) {
    ClassificationInstance inst;
    inst.id = require_string(j, "id");
    if (j.is_object() && j.contains("premise")) {
        inst.text = require_string(j, "premise");
        inst.hypothesis = require_string(j, "hypothesis");
    } else {
        inst.text = require_string(j, "text");
    }
    inst.gold_label = require_string(j, "gold_label");
    return inst;
}

Heuristic heuristic_from_json(const Json& j) {
    Heuristic h;
    h.label = require_string(j, "label");
    h.body = require_string(j, "body");
    if (auto it = j.find("provenance"); it != j.end() && it->is_string()) {
        h.provenance = parse_provenance(it->get<std::string>());
    }
    if (auto it = j.find("generation_index"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw DataError("field 'generation_index' must be an integer");
        h.generation_index = it->get<int>();
    }
    if (auto it = j.find("eval_accuracy"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw DataError("field 'eval_accuracy' must be a number");
        h.eval_accuracy = it->get<double>();
    }
    return h;
}

std::vector<Heuristic> load_heuristics(const std::filesystem::path& path) {
    const auto lines = util::split_lines(util::read_file(path));
    std::vector<Heuristic> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (util::trim(lines[i]).empty()) continue;
        try {
            out.push_back(heuristic_from_json(Json::parse(lines[i])));
        } catch (const Json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

void save_heuristics(const std::filesystem::path& path, const std::vector<Heuristic>& items) {
    std::string out;
    for (const auto& h : items) out += to_json(h).dump() + "\n";
    util::write_file_atomic(path, out);
}

std::string format_fraction(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

}  // namespace hdloa
