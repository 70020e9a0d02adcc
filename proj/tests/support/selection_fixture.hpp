#pragma once

// Synthetic selection subset whose per-heuristic Arg-C F1 is fixed in
// advance. Ten RAMS-style instances with fourteen roles each give 140 gold
// spans; a heuristic scripted with (tp, predicted) answers tp slots with the
// gold span, the next predicted - tp slots with a wrong span and the rest with
// "not specified", so its Arg-C F1 is 2 tp / (predicted + 140).

#include "hdloa/heuristics.hpp"
#include "hdloa/llm.hpp"
#include "hdloa/promptkit.hpp"

#include "test_support.hpp"

#include <string>
#include <vector>

namespace hdloa::testing {

struct ScriptedHeuristic {
    Heuristic heuristic;
    int tp = 0;
    int predicted = 0;
    double target_f1 = 0.0;
};

struct SelectionFixture {
    static constexpr int kInstances = 10;
    static constexpr int kRoles = 14;
    static constexpr int kGold = kInstances * kRoles;

    std::vector<EAEInstance> subset;
    std::vector<ScriptedHeuristic> candidates;
    std::vector<prompt::Exemplar> exemplars;
    llm::MockScript script;

    HeuristicSet set() const {
        std::vector<Heuristic> items;
        for (const auto& c : candidates) items.push_back(c.heuristic);
        return HeuristicSet(items, "giver");
    }
};

inline double oracle_selection_f1(int tp, int predicted, int gold) {
    return 2.0 * tp / static_cast<double>(predicted + gold);
}

inline SelectionFixture make_selection_fixture(const prompt::TemplateStore& store) {
    SelectionFixture fx;
    auto make = [](std::string label, std::string body, int index, int tp, int predicted, double target) {
        return ScriptedHeuristic{Heuristic{std::move(label), std::move(body), Provenance::Generated, index, std::nullopt},
                                 tp, predicted, target};
    };
    fx.candidates = {
        make("Semantic", "The [giver] is the party that provides the gift or grant.", 0, 47, 139, 0.3369),
        make("Syntactic", "The [giver] usually precedes a 'to' phrase that introduces the recipient.", 1, 24, 41, 0.2652),
        make("Lexical", "The [giver] sits near words such as donor, sponsor or benefactor.", 2, 35, 35, 0.40),
    };

    for (int i = 0; i < SelectionFixture::kInstances; ++i) {
        EAEInstance inst;
        inst.id = "syn-" + std::to_string(i);
        inst.event_type = "transaction.transaction.giftgrantprovideaid";
        inst.document = "Record " + std::to_string(i) + " : the council granted support .";
        const auto at = inst.document.find("granted");
        inst.trigger = Trigger{"granted", at, at + 7};
        for (int r = 0; r < SelectionFixture::kRoles; ++r) {
            const std::string role = "role" + std::to_string(r);
            const std::string span = "entity " + std::to_string(i) + "-" + std::to_string(r);
            inst.roles.push_back(role);
            inst.gold[role] = {span};
            inst.document += " " + span + " .";
        }
        fx.subset.push_back(std::move(inst));
    }

    fx.exemplars = prompt::exemplars_for(store, prompt::load_demos(store, TaskKind::EaeRams), prompt::Style::HdLoa);

    for (const auto& c : fx.candidates) {
        for (int i = 0; i < SelectionFixture::kInstances; ++i) {
            const auto& inst = fx.subset[static_cast<std::size_t>(i)];
            RolePredictions pred;
            for (int r = 0; r < SelectionFixture::kRoles; ++r) {
                const int slot = i * SelectionFixture::kRoles + r;
                const auto& role = inst.roles[static_cast<std::size_t>(r)];
                if (slot < c.tp) {
                    pred.per_role[role] = inst.gold.at(role);
                } else if (slot < c.predicted) {
                    pred.per_role[role] = {"unrelated mention " + std::to_string(slot)};
                } else {
                    pred.per_role[role] = {};
                }
            }
            const auto prompt_text = heuristics::single_heuristic_prompt(store, TaskKind::EaeRams, fx.exemplars,
                                                                         c.heuristic, inst);
            fx.script.rules.push_back({llm::MockRule::Match::PromptDigest, llm::prompt_digest(prompt_text),
                                       "Step 3 done.\n" + prompt::render_answer_block(inst.roles, pred)});
        }
    }
    return fx;
}

}  // namespace hdloa::testing
