#include "hdloa/promptkit.hpp"

#include "hdloa/error.hpp"
#include "hdloa/json_io.hpp"
#include "hdloa/util.hpp"

#include <cstdlib>

#ifndef HDLOA_DEFAULT_TEMPLATE_DIR
#define HDLOA_DEFAULT_TEMPLATE_DIR "templates"
#endif

namespace hdloa::prompt {

std::string_view to_string(Style style) {
    switch (style) {
        case Style::HdLoa: return "hdloa";
        case Style::Cot: return "cot";
        case Style::Standard: return "standard";
    }
    return "hdloa";
}

Style parse_style(std::string_view name) {
    const auto n = util::to_lower(util::trim(name));
    if (n == "hdloa" || n == "hd-loa") return Style::HdLoa;
    if (n == "cot") return Style::Cot;
    if (n == "standard") return Style::Standard;
    throw ConfigError("unknown prompt style: '" + std::string(name) + "'");
}

std::string_view to_string(Ablation ablation) {
    switch (ablation) {
        case Ablation::None: return "none";
        case Ablation::NoHeuristics: return "no_heuristics";
        case Ablation::NoLoa: return "no_loa";
    }
    return "none";
}

Ablation parse_ablation(std::string_view name) {
    const auto n = util::to_lower(util::trim(name));
    if (n.empty() || n == "none") return Ablation::None;
    if (n == "no_heuristics") return Ablation::NoHeuristics;
    if (n == "no_loa") return Ablation::NoLoa;
    throw ConfigError("unknown ablation: '" + std::string(name) + "'");
}

void validate(const AnalogyMapping& m) {
    if (m.base_role.empty() || m.target_role.empty()) throw PreconditionError("analogy mapping needs both roles");
    if (m.base_role == m.target_role) {
        throw PreconditionError("analogy mapping from '" + m.base_role + "' to itself");
    }
    if (util::trim(m.target_heuristic_text).empty()) {
        throw PreconditionError("analogy mapping to '" + m.target_role + "' has no target heuristic");
    }
}

// ---------------------------------------------------------------- answer lines

std::string render_answer_line(std::string_view role, const std::vector<std::string>& spans) {
    std::string out = "[" + std::string(role) + "]: ";
    if (spans.empty()) return out + "\"" + std::string(kNotSpecified) + "\"";
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (i) out += ", ";
        out += "\"" + spans[i] + "\"";
    }
    return out;
}

std::string render_answer_block(const std::vector<std::string>& roles, const RolePredictions& predictions) {
    std::vector<std::string> lines;
    for (const auto& role : roles) {
        auto it = predictions.per_role.find(role);
        lines.push_back(render_answer_line(role, it == predictions.per_role.end() ? std::vector<std::string>{} : it->second));
    }
    return util::join(lines, "\n");
}

// ---------------------------------------------------------------- LoA walkthroughs

namespace {

std::string with_suffix(const std::string& label, std::string_view suffix) {
    const auto t = util::trim(label);
    const auto words = util::split_words(t);
    if (!words.empty() && util::iequals(words.back(), suffix)) return t;
    return t + " " + std::string(suffix);
}

std::string join_heuristic_names(const std::vector<std::string>& labels) {
    std::vector<std::string> names;
    for (const auto& l : labels) names.push_back(with_suffix(l, "Heuristic"));
    if (names.size() == 1) return names[0];
    if (names.size() == 2) return names[0] + " and " + names[1];
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += (i + 1 == names.size()) ? ", and " : ", ";
        out += names[i];
    }
    return out;
}

std::string quoted_list(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += "\"" + items[i] + "\"";
    }
    return out + "]";
}

[[noreturn]] void missing(const std::string& role, const char* step, const char* what) {
    throw PreconditionError("LoA walkthrough for [" + role + "]: " + step + " has no " + what);
}

}  // namespace

std::string render_loa_walkthrough(const RoleWalkthrough& w, LoaPhrasing phrasing, const LoaRenderOptions& options) {
    const std::string& role = w.role;
    if (role.empty()) throw PreconditionError("LoA walkthrough without a role name");
    if (w.selected.empty()) missing(role, "Step 1", "selected heuristic");
    if (w.applications.empty()) missing(role, "Step 2", "heuristic application");
    for (const auto& a : w.applications) {
        if (util::trim(a.heuristic_label).empty()) missing(role, "Step 2", "heuristic label");
        if (util::trim(a.heuristic_text).empty()) missing(role, "Step 2", "heuristic text");
        if (util::trim(a.finding).empty()) missing(role, "Step 2", "finding");
        if (a.mapping) validate(*a.mapping);
    }
    if (w.candidates.empty()) missing(role, "Step 3", "candidate");
    if (w.verdicts.empty()) missing(role, "Step 3", "verdict");
    for (const auto& v : w.verdicts) {
        if (util::trim(v.reason).empty()) missing(role, "Step 3", "verdict reason");
    }
    if (phrasing == LoaPhrasing::Docee && (w.selected.size() != 1 || w.applications.size() != 1)) {
        throw PreconditionError("LoA walkthrough for [" + role + "]: DocEE phrasing takes exactly one heuristic");
    }

    const std::string tag = "[" + role + "]";
    const std::string where = options.reference_heuristic_list ? " in the heuristic list" : "";
    std::vector<std::string> lines;
    lines.push_back("Recognizing " + tag + " in the given document:");
    if (phrasing == LoaPhrasing::Rams) {
        lines.push_back("Step 1: Select one or two heuristics" + where + " that are most suitable to identify the " +
                        tag + " in the given document: " + join_heuristic_names(w.selected) + ".");
        lines.push_back("Step 2: Apply selected heuristics to identify " + tag + " independently.");
        for (std::size_t i = 0; i < w.applications.size(); ++i) {
            const auto& a = w.applications[i];
            lines.push_back("Step 2." + std::to_string(i + 1) + ": Identify the " + tag + " based on " +
                            with_suffix(a.heuristic_label, "Heuristic") + ": \"" + a.heuristic_text + "\". " +
                            a.finding);
        }
        lines.push_back(std::string("Step 3 Reevaluate argument ") +
                        (w.candidates.size() == 1 ? "candidate: " : "candidates: ") + quoted_list(w.candidates));
    } else {
        lines.push_back("Step 1 Select a heuristic" + where + " that is most suitable to identify the " + tag +
                        " in the given document: " + join_heuristic_names(w.selected) + ".");
        const auto& a = w.applications.front();
        lines.push_back("Step 2 Identify the argument based on " + with_suffix(a.heuristic_label, "Heuristic") + ": " +
                        a.heuristic_text + ". " + a.finding);
        lines.push_back("Step 3: reevaluate_argument_candidates:");
    }
    for (const auto& v : w.verdicts) {
        lines.push_back("Is argument \"" + v.candidate + "\" alignment with the argument role " + tag + "? " +
                        (v.aligned ? "Yes" : "No") + ", because " + v.reason);
    }
    lines.push_back(render_answer_line(role, w.answer));
    return util::join(lines, "\n");
}

namespace {

std::vector<std::string> demo_roles(const LoaDemo& demo) {
    std::vector<std::string> roles;
    for (const auto& w : demo.roles) roles.push_back(w.role);
    return roles;
}

std::string demo_answer_block(const LoaDemo& demo) {
    std::vector<std::string> lines;
    for (const auto& w : demo.roles) lines.push_back(render_answer_line(w.role, w.answer));
    return util::join(lines, "\n");
}

}  // namespace

Exemplar render_loa_exemplar(const LoaDemo& demo, const LoaRenderOptions& options) {
    if (demo.roles.empty()) throw PreconditionError("LoA exemplar demonstrates no roles");
    Exemplar ex;
    ex.question = demo.question;
    std::vector<std::string> parts;
    if (!demo.elaboration.empty()) parts.push_back(demo.elaboration);
    for (const auto& w : demo.roles) parts.push_back(render_loa_walkthrough(w, demo.phrasing, options));
    ex.reasoning = util::join(parts, "\n\n");
    ex.answer = demo_answer_block(demo);
    ex.answer_inline = true;
    for (const auto& r : demo_roles(demo)) ex.label_coverage.insert(r);
    return ex;
}

Exemplar direct_answer_exemplar(const LoaDemo& demo) {
    Exemplar ex;
    ex.question = demo.question;
    ex.answer = demo_answer_block(demo);
    for (const auto& r : demo_roles(demo)) ex.label_coverage.insert(r);
    return ex;
}

Exemplar cot_exemplar(const LoaDemo& demo) {
    if (util::trim(demo.cot_rationale).empty()) throw PreconditionError("CoT exemplar needs a rationale");
    Exemplar ex = direct_answer_exemplar(demo);
    ex.reasoning = demo.cot_rationale;
    return ex;
}

// ---------------------------------------------------------------- templates

std::vector<std::string> template_slots(std::string_view tmpl) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = tmpl.find("{{", pos)) != std::string_view::npos) {
        const auto end = tmpl.find("}}", pos + 2);
        if (end == std::string_view::npos) throw PreconditionError("template has an unclosed '{{'");
        std::string name = util::trim(tmpl.substr(pos + 2, end - pos - 2));
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
        pos = end + 2;
    }
    return out;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(tmpl.size() * 2);
    std::size_t pos = 0;
    while (true) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw PreconditionError("template has an unclosed '{{'");
        out.append(tmpl.substr(pos, open - pos));
        const std::string name = util::trim(tmpl.substr(open + 2, close - open - 2));
        auto it = slots.find(name);
        if (it == slots.end()) throw PreconditionError("template slot '{{" + name + "}}' has no value");
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

std::filesystem::path default_template_dir() {
    if (const char* env = std::getenv("HDLOA_TEMPLATE_DIR"); env && *env) return env;
    return HDLOA_DEFAULT_TEMPLATE_DIR;
}

TemplateStore::TemplateStore(std::filesystem::path root) : root_(std::move(root)) {
    if (!std::filesystem::is_directory(root_)) {
        throw ConfigError("template directory not found: " + root_.string());
    }
}

std::filesystem::path TemplateStore::path(std::string_view group, std::string_view file) const {
    return root_ / std::string(group) / std::string(file);
}

std::string TemplateStore::load(std::string_view group, std::string_view name) const {
    const auto p = path(group, std::string(name) + ".txt");
    if (!std::filesystem::exists(p)) throw ConfigError("template not found: " + p.string());
    std::string text = util::read_file(p);
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

std::string TemplateStore::load(TaskKind task, std::string_view name) const {
    return load(to_string(task), name);
}

std::string TemplateStore::digest(std::string_view group, std::string_view name) const {
    return util::sha256_hex(load(group, name));
}

// ---------------------------------------------------------------- demos

namespace {

Heuristic heuristic_ref_from_json(const Json& j) {
    Heuristic h;
    h.label = j.at("label").get<std::string>();
    h.body = j.at("body").get<std::string>();
    h.provenance = Provenance::Manual;
    return h;
}

std::vector<std::string> strings(const Json& j, const char* key) {
    if (!j.contains(key)) return {};
    return j.at(key).get<std::vector<std::string>>();
}

LoaDemo loa_demo_from_json(const Json& j) {
    LoaDemo d;
    d.question = j.at("question").get<std::string>();
    d.elaboration = j.value("elaboration", std::string{});
    d.cot_rationale = j.value("cot_rationale", std::string{});
    d.phrasing = j.value("phrasing", std::string("rams")) == "docee" ? LoaPhrasing::Docee : LoaPhrasing::Rams;
    for (const auto& r : j.at("roles")) {
        RoleWalkthrough w;
        w.role = r.at("role").get<std::string>();
        w.selected = strings(r, "selected");
        for (const auto& a : r.value("applications", Json::array())) {
            HeuristicApplication app;
            app.heuristic_label = a.at("heuristic_label").get<std::string>();
            app.heuristic_text = a.at("heuristic_text").get<std::string>();
            app.finding = a.at("finding").get<std::string>();
            if (a.contains("mapping")) {
                const auto& m = a.at("mapping");
                AnalogyMapping map;
                map.base_role = m.at("base_role").get<std::string>();
                map.base_heuristic = heuristic_ref_from_json(m.at("base_heuristic"));
                map.target_role = w.role;
                map.target_heuristic_text = app.heuristic_text;
                if (m.contains("target_argument") && !m.at("target_argument").is_null()) {
                    map.target_argument = m.at("target_argument").get<std::string>();
                }
                app.mapping = std::move(map);
            }
            w.applications.push_back(std::move(app));
        }
        w.candidates = strings(r, "candidates");
        for (const auto& v : r.value("verdicts", Json::array())) {
            w.verdicts.push_back({v.at("candidate").get<std::string>(), v.at("aligned").get<bool>(),
                                  v.at("reason").get<std::string>()});
        }
        w.answer = strings(r, "answer");
        d.roles.push_back(std::move(w));
    }
    return d;
}

std::string label_answer_line(TaskKind task, const std::string& label) {
    return task == TaskKind::Nli ? "Therefore, the answer is: " + label : "sentiment: " + label;
}

}  // namespace

DemoSet demos_from_json_text(std::string_view text, TaskKind task) {
    DemoSet set;
    set.task = task;
    try {
        const Json j = Json::parse(text);
        for (const auto& d : j.at("demos")) {
            if (is_eae(task)) {
                set.eae.push_back(loa_demo_from_json(d));
            } else {
                TextDemo t;
                t.text = d.at("text").get<std::string>();
                t.hypothesis = d.value("hypothesis", std::string{});
                t.loa_reasoning = d.value("loa_reasoning", std::string{});
                t.cot_rationale = d.value("cot_rationale", std::string{});
                t.label = d.at("label").get<std::string>();
                const auto& labels = label_set(task);
                if (std::find(labels.begin(), labels.end(), t.label) == labels.end()) {
                    throw ConfigError("demo label '" + t.label + "' is not valid for " + std::string(to_string(task)));
                }
                set.text.push_back(std::move(t));
            }
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed demos file: ") + e.what());
    }
    return set;
}

DemoSet load_demos(const TemplateStore& store, TaskKind task) {
    const auto p = store.path(to_string(task), "demos.json");
    if (!std::filesystem::exists(p)) throw ConfigError("demos file not found: " + p.string());
    return demos_from_json_text(util::read_file(p), task);
}

std::vector<Exemplar> exemplars_for(const TemplateStore& store, const DemoSet& demos, Style style, Ablation ablation) {
    std::vector<Exemplar> out;
    if (is_eae(demos.task)) {
        for (const auto& d : demos.eae) {
            if (style == Style::Standard || (style == Style::HdLoa && ablation == Ablation::NoLoa)) {
                out.push_back(direct_answer_exemplar(d));
            } else if (style == Style::Cot) {
                out.push_back(cot_exemplar(d));
            } else {
                LoaRenderOptions opts;
                opts.reference_heuristic_list = ablation != Ablation::NoHeuristics;
                out.push_back(render_loa_exemplar(d, opts));
            }
        }
        return out;
    }
    for (const auto& d : demos.text) {
        Exemplar ex;
        ex.question = render_question(store, demos.task, d.text, d.hypothesis);
        ex.answer = label_answer_line(demos.task, d.label);
        ex.label_coverage.insert(d.label);
        if (style == Style::Cot) {
            ex.reasoning = d.cot_rationale;
        } else if (style == Style::HdLoa && ablation != Ablation::NoLoa) {
            ex.reasoning = d.loa_reasoning;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<Heuristic> load_default_heuristics(const TemplateStore& store, TaskKind task) {
    return load_heuristics(store.path(to_string(task), "heuristics.jsonl"));
}

// ---------------------------------------------------------------- rendering

std::string render_heuristic_list(TaskKind task, std::span<const Heuristic> heuristics) {
    const std::string_view suffix = is_eae(task) ? "Heuristic" : "Pattern";
    std::vector<std::string> lines;
    for (const auto& h : heuristics) lines.push_back(with_suffix(h.label, suffix) + ": " + util::trim(h.body));
    return util::join(lines, "\n");
}

std::string render_exemplar(const Exemplar& ex) {
    std::string out = ex.question + "\nAnswer:\n";
    if (ex.answer_inline) return out + ex.reasoning;
    if (ex.reasoning.empty()) return out + ex.answer;
    return out + ex.reasoning + "\n" + ex.answer;
}

std::string render(const PromptBundle& b) {
    std::vector<std::string> exemplars;
    for (const auto& ex : b.exemplars) exemplars.push_back(render_exemplar(ex));
    const std::map<std::string, std::string> slots{
        {"heuristics", render_heuristic_list(b.task, b.heuristic_block)},
        {"exemplars", util::join(exemplars, "\n\n")},
        {"target", b.target},
        {"base_role", b.base_role},
    };
    return fill_template(b.instruction, slots);
}

std::string mark_trigger(const EAEInstance& inst) {
    if (!inst.trigger) return inst.document;
    const auto& t = *inst.trigger;
    if (t.char_start > t.char_end || t.char_end > inst.document.size()) {
        throw PreconditionError("instance '" + inst.id + "': trigger offsets outside the document");
    }
    return inst.document.substr(0, t.char_start) + "<t>" + inst.document.substr(t.char_start, t.char_end - t.char_start) +
           "</t>" + inst.document.substr(t.char_end);
}

std::string enumerate_roles(TaskKind task, const std::vector<std::string>& roles) {
    if (task == TaskKind::EaeDocee) {
        std::vector<std::string> quoted;
        for (const auto& r : roles) quoted.push_back("'" + r + "'");
        return util::join(quoted, ", ");
    }
    if (roles.size() == 1) return roles[0];
    if (roles.size() == 2) return roles[0] + " and " + roles[1];
    std::string out;
    for (std::size_t i = 0; i < roles.size(); ++i) {
        if (i) out += (i + 1 == roles.size()) ? ", and " : ", ";
        out += roles[i];
    }
    return out;
}

std::string render_target(const TemplateStore& store, TaskKind task, const EAEInstance& target) {
    if (!is_eae(task)) throw PreconditionError("EAE target passed for a classification task");
    if (target.roles.empty()) throw PreconditionError("instance '" + target.id + "' has no roles to extract");
    std::map<std::string, std::string> slots{
        {"roles", enumerate_roles(task, target.roles)},
        {"event_type", target.event_type},
        {"document", mark_trigger(target)},
    };
    if (task == TaskKind::EaeRams) {
        if (!target.trigger) throw PreconditionError("RAMS instance '" + target.id + "' has no trigger");
        slots["trigger"] = target.trigger->text;
    }
    return fill_template(store.load(task, "target"), slots) + "\nAnswer:\n";
}

std::string render_question(const TemplateStore& store, TaskKind task, const std::string& text,
                            const std::string& hypothesis) {
    if (is_eae(task)) throw PreconditionError("render_question is for classification tasks");
    return fill_template(store.load(task, "target"), {{"text", text}, {"premise", text}, {"hypothesis", hypothesis}});
}

std::string render_target(const TemplateStore& store, TaskKind task, const ClassificationInstance& target) {
    return render_question(store, task, target.text, target.hypothesis) + "\nAnswer:\n";
}

void validate_loa_exemplar(const Exemplar& ex, TaskKind task) {
    if (util::trim(ex.answer).empty()) throw PreconditionError("exemplar has an empty answer");
    const int steps = task == TaskKind::Nli ? 2 : 3;
    std::size_t pos = 0;
    for (int s = 1; s <= steps; ++s) {
        const std::string marker = "Step " + std::to_string(s);
        const auto found = ex.reasoning.find(marker, pos);
        if (found == std::string::npos) {
            throw PreconditionError("LoA exemplar is missing '" + marker + "' (in order)");
        }
        pos = found + marker.size();
    }
}

namespace {

template <typename Target>
PromptBundle build_hdloa(const TemplateStore& store, TaskKind task, std::span<const Heuristic> heuristics,
                         std::vector<Exemplar> exemplars, const Target& target, Ablation ablation,
                         std::string base_role) {
    if (ablation != Ablation::NoHeuristics && heuristics.empty()) {
        throw PreconditionError("HD-LoA prompt needs at least one heuristic");
    }
    const std::size_t want = minimal_exemplar_count(task);
    if (exemplars.size() != want) {
        throw PreconditionError("HD-LoA prompt for " + std::string(to_string(task)) + " takes " +
                                std::to_string(want) + " exemplar(s), got " + std::to_string(exemplars.size()));
    }
    if (ablation != Ablation::NoLoa) {
        for (const auto& ex : exemplars) validate_loa_exemplar(ex, task);
    }
    PromptBundle b;
    b.style = Style::HdLoa;
    b.ablation = ablation;
    b.task = task;
    b.instruction = store.load(task, ablation == Ablation::NoHeuristics ? "hdloa_no_heuristics" : "hdloa");
    b.base_role = std::move(base_role);
    if (ablation != Ablation::NoHeuristics) b.heuristic_block.assign(heuristics.begin(), heuristics.end());
    b.exemplars = std::move(exemplars);
    b.target = render_target(store, task, target);
    b.rendered = render(b);
    return b;
}

template <typename Target>
PromptBundle build_baseline(const TemplateStore& store, Style style, TaskKind task, std::vector<Exemplar> exemplars,
                            const Target& target) {
    if (style == Style::HdLoa) throw PreconditionError("build_baseline_prompt does not build HD-LoA prompts");
    if (exemplars.empty()) throw PreconditionError("baseline prompt needs at least one exemplar");
    for (auto& ex : exemplars) {
        if (style == Style::Standard) {
            ex.reasoning.clear();
            ex.answer_inline = false;
        } else if (util::trim(ex.reasoning).empty() || ex.answer_inline) {
            throw PreconditionError("CoT exemplar needs a free-form rationale");
        }
    }
    PromptBundle b;
    b.style = style;
    b.task = task;
    b.instruction = store.load(task, to_string(style));
    b.exemplars = std::move(exemplars);
    b.target = render_target(store, task, target);
    b.rendered = render(b);
    return b;
}

}  // namespace

PromptBundle build_hdloa_prompt(const TemplateStore& store, TaskKind task, std::span<const Heuristic> heuristics,
                                std::vector<Exemplar> exemplars, const EAEInstance& target, Ablation ablation,
                                std::string base_role) {
    if (!is_eae(task)) throw PreconditionError("EAE target passed for a classification task");
    return build_hdloa(store, task, heuristics, std::move(exemplars), target, ablation, std::move(base_role));
}

PromptBundle build_hdloa_prompt(const TemplateStore& store, TaskKind task, std::span<const Heuristic> heuristics,
                                std::vector<Exemplar> exemplars, const ClassificationInstance& target,
                                Ablation ablation, std::string base_role) {
    if (is_eae(task)) throw PreconditionError("classification target passed for an EAE task");
    return build_hdloa(store, task, heuristics, std::move(exemplars), target, ablation, std::move(base_role));
}

PromptBundle build_baseline_prompt(const TemplateStore& store, Style style, TaskKind task,
                                   std::vector<Exemplar> exemplars, const EAEInstance& target) {
    return build_baseline(store, style, task, std::move(exemplars), target);
}

PromptBundle build_baseline_prompt(const TemplateStore& store, Style style, TaskKind task,
                                   std::vector<Exemplar> exemplars, const ClassificationInstance& target) {
    return build_baseline(store, style, task, std::move(exemplars), target);
}

}  // namespace hdloa::prompt
