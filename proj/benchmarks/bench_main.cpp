#include "hdloa/parse.hpp"
#include "hdloa/promptkit.hpp"
#include "hdloa/score.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

using namespace hdloa;

namespace {

const std::vector<std::string> kTokens{"the", "a",    "of",  "in",     "Army", "city", "town", "man",  "two", "Syria",
                                       "aid", "bank", "car", "police", "red",  "old",  "new",  "women", ",",  "people"};

std::string random_span(std::mt19937_64& rng, int words) {
    std::string s;
    for (int i = 0; i < words; ++i) {
        if (i) s += ' ';
        s += kTokens[rng() % kTokens.size()];
    }
    return s;
}

struct Corpus {
    std::vector<EAEInstance> instances;
    std::vector<score::PredictionRecord> predictions;
};

Corpus make_corpus(std::size_t n) {
    std::mt19937_64 rng(42);
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) {
        EAEInstance inst;
        inst.id = "i" + std::to_string(i);
        inst.document = "doc";
        inst.event_type = "event";
        score::PredictionRecord rec;
        rec.instance_id = inst.id;
        for (int r = 0; r < 5; ++r) {
            const std::string role = "role" + std::to_string(r);
            inst.roles.push_back(role);
            inst.gold[role] = {random_span(rng, 3)};
            rec.predictions.per_role[role] = {rng() % 2 ? inst.gold[role].front() : random_span(rng, 2)};
        }
        c.instances.push_back(std::move(inst));
        c.predictions.push_back(std::move(rec));
    }
    return c;
}

void BM_NormalizeSpan(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::vector<std::string> spans;
    for (int i = 0; i < 1024; ++i) spans.push_back("  " + random_span(rng, 6) + " ");
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(score::normalize_span(spans[i++ % spans.size()]));
}
BENCHMARK(BM_NormalizeSpan);

void BM_ParseAnswerBlock(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto roles_n = static_cast<int>(state.range(0));
    std::vector<std::string> roles;
    RolePredictions pred;
    for (int r = 0; r < roles_n; ++r) {
        roles.push_back("role" + std::to_string(r));
        pred.per_role[roles.back()] = {random_span(rng, 4), random_span(rng, 2)};
    }
    const std::string text = "Step 1: select.\nStep 2: apply.\nStep 3: reevaluate.\n" +
                             prompt::render_answer_block(roles, pred);
    for (auto _ : state) benchmark::DoNotOptimize(parse::parse_eae_output(text, roles, 3));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseAnswerBlock)->Arg(4)->Arg(16)->Arg(64);

void BM_ScoreEae(benchmark::State& state) {
    const auto corpus = make_corpus(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(score::score_eae(corpus.instances, corpus.predictions));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreEae)->Arg(100)->Arg(1000);

void BM_RenderAnswerBlock(benchmark::State& state) {
    const auto corpus = make_corpus(1);
    const auto& inst = corpus.instances.front();
    const auto& pred = corpus.predictions.front().predictions;
    for (auto _ : state) benchmark::DoNotOptimize(prompt::render_answer_block(inst.roles, pred));
}
BENCHMARK(BM_RenderAnswerBlock);

void BM_BuildHdLoaPrompt(benchmark::State& state) {
    const prompt::TemplateStore store(HDLOA_BENCH_TEMPLATE_DIR);
    const auto exemplars = prompt::exemplars_for(store, prompt::load_demos(store, TaskKind::EaeRams), prompt::Style::HdLoa);
    const auto heuristics = prompt::load_default_heuristics(store, TaskKind::EaeRams);
    EAEInstance target;
    target.id = "bench";
    target.event_type = "transaction.transaction.giftgrantprovideaid";
    target.document = "The foundation donated medical supplies to the regional hospital on Monday .";
    target.trigger = Trigger{"donated", 15, 22};
    target.roles = {"giver", "recipient", "beneficiary", "place"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(prompt::build_hdloa_prompt(store, TaskKind::EaeRams, heuristics, exemplars, target,
                                                            prompt::Ablation::None));
    }
}
BENCHMARK(BM_BuildHdLoaPrompt);

}  // namespace

BENCHMARK_MAIN();
