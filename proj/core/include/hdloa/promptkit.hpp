#pragma once

#include "hdloa/core.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hdloa::prompt {

enum class Style { HdLoa, Cot, Standard };
std::string_view to_string(Style style);
Style parse_style(std::string_view name);

// Ablations of the HD-LoA prompt.
enum class Ablation { None, NoHeuristics, NoLoa };
std::string_view to_string(Ablation ablation);
Ablation parse_ablation(std::string_view name);

struct Exemplar {
    std::string question;
    std::string reasoning;  // empty for Standard prompting
    std::string answer;
    std::set<std::string> label_coverage;  // roles or labels demonstrated
    // The answer lines are already interleaved in `reasoning` (LoA EAE
    // walkthroughs); `answer` is then not emitted a second time.
    bool answer_inline = false;
};

// r_b : h_b :: r_t : h_t, plus the argument inferred from h_t.
struct AnalogyMapping {
    std::string base_role;
    Heuristic base_heuristic;
    std::string target_role;
    std::string target_heuristic_text;
    std::optional<std::string> target_argument;
};

// Throws PreconditionError when base_role == target_role or a text is empty.
void validate(const AnalogyMapping& mapping);

// Step 2: one selected heuristic applied on its own.
struct HeuristicApplication {
    std::string heuristic_label;  // "Semantic"
    std::string heuristic_text;   // as applied to this role (h_t when mapped)
    std::string finding;          // "Applying this heuristic to the document, ..."
    std::optional<AnalogyMapping> mapping;
};

struct CandidateVerdict {
    std::string candidate;
    bool aligned = false;
    std::string reason;
};

struct RoleWalkthrough {
    std::string role;
    std::vector<std::string> selected;                // Step 1
    std::vector<HeuristicApplication> applications;   // Step 2
    std::vector<std::string> candidates;              // Step 3
    std::vector<CandidateVerdict> verdicts;           // Step 3
    std::vector<std::string> answer;                  // empty -> "not specified"
};

// RAMS walkthroughs allow one or two heuristics and number Step 2.x; DocEE
// uses a single heuristic per role.
enum class LoaPhrasing { Rams, Docee };

struct LoaDemo {
    std::string question;
    std::string elaboration;  // event type and role glosses
    std::vector<RoleWalkthrough> roles;
    LoaPhrasing phrasing = LoaPhrasing::Rams;
    std::string cot_rationale;  // for the CoT baseline
};

struct LoaRenderOptions {
    // Off for the no-heuristics ablation: Step 1 then does not point at a
    // heuristic list that is absent from the prompt.
    bool reference_heuristic_list = true;
};

// `[role]: "a", "b"`, or `[role]: "not specified"` for an empty list.
std::string render_answer_line(std::string_view role, const std::vector<std::string>& spans);
// One answer line per role, in the given order.
std::string render_answer_block(const std::vector<std::string>& roles, const RolePredictions& predictions);

// Step 1 / Step 2 / Step 3 text for one role, ending with its answer line.
// Throws PreconditionError naming the role and step when content is missing.
std::string render_loa_walkthrough(const RoleWalkthrough& walkthrough, LoaPhrasing phrasing,
                                   const LoaRenderOptions& options = {});

// Full LoA exemplar: elaboration, then one walkthrough per role.
Exemplar render_loa_exemplar(const LoaDemo& demo, const LoaRenderOptions& options = {});
// Question followed directly by the answer lines (no-LoA ablation, Standard).
Exemplar direct_answer_exemplar(const LoaDemo& demo);
// Question, free-form rationale, answer lines.
Exemplar cot_exemplar(const LoaDemo& demo);

// Demonstration for a classification task.
struct TextDemo {
    std::string text;        // sentence, or premise
    std::string hypothesis;  // NLI only
    std::string loa_reasoning;
    std::string cot_rationale;
    std::string label;
};

// ---------------------------------------------------------------- templates

// Replaces every {{name}} with slots.at(name). Throws PreconditionError when
// the template names a slot that has no value or a "{{" is never closed.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& slots);

// Slot names in order of first appearance.
std::vector<std::string> template_slots(std::string_view tmpl);

// Resolution order: $HDLOA_TEMPLATE_DIR, then the directory baked in at build
// time.
std::filesystem::path default_template_dir();

// Reads templates/<task>/<name>.txt (and other assets) from one root.
class TemplateStore {
public:
    explicit TemplateStore(std::filesystem::path root = default_template_dir());

    // Text of <root>/<group>/<name>.txt with one trailing newline removed.
    std::string load(std::string_view group, std::string_view name) const;
    std::string load(TaskKind task, std::string_view name) const;
    std::filesystem::path path(std::string_view group, std::string_view file) const;
    std::string digest(std::string_view group, std::string_view name) const;
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

// Demonstrations shipped for a task (templates/<task>/demos.json).
struct DemoSet {
    TaskKind task = TaskKind::EaeRams;
    std::vector<LoaDemo> eae;
    std::vector<TextDemo> text;
};

DemoSet load_demos(const TemplateStore& store, TaskKind task);
DemoSet demos_from_json_text(std::string_view text, TaskKind task);

// Exemplars in the shape a style (and ablation) needs.
std::vector<Exemplar> exemplars_for(const TemplateStore& store, const DemoSet& demos, Style style,
                                    Ablation ablation = Ablation::None);

// Default heuristic list for a task (templates/<task>/heuristics.jsonl).
std::vector<Heuristic> load_default_heuristics(const TemplateStore& store, TaskKind task);

// ---------------------------------------------------------------- bundles

struct PromptBundle {
    Style style = Style::HdLoa;
    Ablation ablation = Ablation::None;
    TaskKind task = TaskKind::EaeRams;
    std::string instruction;  // the template text, slots unfilled
    std::string base_role = "giver";
    std::vector<Heuristic> heuristic_block;
    std::vector<Exemplar> exemplars;
    std::string target;  // rendered target question, ending with the answer cue
    std::string rendered;
};

// Pure function of the bundle's other fields; build_* store its result in
// `rendered`.
std::string render(const PromptBundle& bundle);

std::string render_heuristic_list(TaskKind task, std::span<const Heuristic> heuristics);
std::string render_exemplar(const Exemplar& exemplar);

std::string render_target(const TemplateStore& store, TaskKind task, const EAEInstance& target);
std::string render_target(const TemplateStore& store, TaskKind task, const ClassificationInstance& target);
// Question part of a classification item, shared by targets and exemplars.
std::string render_question(const TemplateStore& store, TaskKind task, const std::string& text,
                            const std::string& hypothesis);

// Inserts "<t>" / "</t>" around the trigger offsets.
std::string mark_trigger(const EAEInstance& inst);

// "a", "a and b", "a, b, and c" (RAMS); "'a', 'b'" (DocEE).
std::string enumerate_roles(TaskKind task, const std::vector<std::string>& roles);

// Throws PreconditionError on empty heuristics (unless the ablation removes
// them), an exemplar count other than minimal_exemplar_count(task), LoA
// exemplars without their step markers, or an EAE target without roles.
PromptBundle build_hdloa_prompt(const TemplateStore& store, TaskKind task, std::span<const Heuristic> heuristics,
                                std::vector<Exemplar> exemplars, const EAEInstance& target,
                                Ablation ablation = Ablation::None, std::string base_role = "giver");
PromptBundle build_hdloa_prompt(const TemplateStore& store, TaskKind task, std::span<const Heuristic> heuristics,
                                std::vector<Exemplar> exemplars, const ClassificationInstance& target,
                                Ablation ablation = Ablation::None, std::string base_role = "giver");

// Standard: question -> answer. CoT: question -> rationale -> answer. Throws
// PreconditionError for Style::HdLoa.
PromptBundle build_baseline_prompt(const TemplateStore& store, Style style, TaskKind task,
                                   std::vector<Exemplar> exemplars, const EAEInstance& target);
PromptBundle build_baseline_prompt(const TemplateStore& store, Style style, TaskKind task,
                                   std::vector<Exemplar> exemplars, const ClassificationInstance& target);

// Checks the three LoA step markers ("Step 1", "Step 2", "Step 3") appear in
// order; NLI demonstrations only carry the first two.
void validate_loa_exemplar(const Exemplar& exemplar, TaskKind task);

}  // namespace hdloa::prompt
