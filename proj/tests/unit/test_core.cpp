#include "hdloa/core.hpp"
#include "hdloa/error.hpp"
#include "hdloa/json_io.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace hdloa;

namespace {

EAEInstance rams_instance() {
    EAEInstance inst;
    inst.id = "r1";
    inst.document = "Activists said a massacre took place in Syria .";
    inst.event_type = "life.die.na";
    inst.trigger = Trigger{"massacre", 17, 25};
    inst.roles = {"victim", "place"};
    inst.gold = {{"place", {"Syria"}}};
    return inst;
}

}  // namespace

TEST_CASE("task kinds round-trip through their names") {
    for (auto t : {TaskKind::EaeRams, TaskKind::EaeDocee, TaskKind::Sentiment, TaskKind::Nli}) {
        CHECK(parse_task_kind(to_string(t)) == t);
    }
    CHECK(parse_task_kind("sentiment") == TaskKind::Sentiment);
    CHECK(parse_task_kind("NLI") == TaskKind::Nli);
    CHECK_THROWS_AS(parse_task_kind("ace05"), ConfigError);
}

TEST_CASE("label sets and per-task constants") {
    CHECK(label_set(TaskKind::Sentiment) == std::vector<std::string>{"positive", "negative"});
    CHECK(label_set(TaskKind::Nli) == std::vector<std::string>{"yes", "no", "it is not possible to tell"});
    CHECK(label_set(TaskKind::EaeRams).empty());
    CHECK(minimal_exemplar_count(TaskKind::EaeRams) == 1);
    CHECK(minimal_exemplar_count(TaskKind::EaeDocee) == 1);
    CHECK(minimal_exemplar_count(TaskKind::Sentiment) == 2);
    CHECK(minimal_exemplar_count(TaskKind::Nli) == 3);
    CHECK(default_max_answers(TaskKind::EaeRams) == 1);
    CHECK(default_max_answers(TaskKind::EaeDocee) == 3);
}

TEST_CASE("validate_instance accepts a well-formed instance") {
    CHECK(validate_instance(rams_instance()).empty());
}

TEST_CASE("validate_instance reports a gold role missing from roles") {
    auto inst = rams_instance();
    inst.roles = {"place"};
    inst.gold["victim"] = {"280 victims"};
    const auto v = validate_instance(inst);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("victim") != std::string::npos);
}

TEST_CASE("validate_instance reports trigger offsets over different text") {
    auto inst = rams_instance();
    inst.trigger = Trigger{"massacre", 0, 9};  // "Activists"
    const auto v = validate_instance(inst);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("does not match") != std::string::npos);
}

TEST_CASE("validate_instance reports out-of-range offsets, sentinel gold and empty sets") {
    auto inst = rams_instance();
    inst.trigger = Trigger{"x", 40, 400};
    inst.gold["victim"] = {"not specified"};
    inst.gold["place"] = {};
    CHECK(validate_instance(inst).size() == 3);
}

TEST_CASE("validate_instance tolerates whitespace differences in the trigger") {
    auto inst = rams_instance();
    inst.document = "They  carried   out the attack";
    inst.trigger = Trigger{"carried out", 6, 19};
    inst.gold.clear();
    CHECK(validate_instance(inst).empty());
}

TEST_CASE("validate_instance is pure") {
    auto inst = rams_instance();
    inst.roles.push_back("place");
    CHECK(validate_instance(inst) == validate_instance(inst));
}

TEST_CASE("classification instances must carry a label from the task's set") {
    ClassificationInstance c{"s1", "great film", "", "positive"};
    CHECK(validate_instance(c, TaskKind::Sentiment).empty());
    c.gold_label = "maybe";
    CHECK(validate_instance(c, TaskKind::Sentiment).size() == 1);
    ClassificationInstance n{"n1", "A man sleeps.", "", "it is not possible to tell"};
    CHECK(validate_instance(n, TaskKind::Nli).size() == 1);  // hypothesis missing
}

TEST_CASE("HeuristicSet enforces distinct labels and indices") {
    auto h = [](std::string label, int idx) {
        return Heuristic{std::move(label), "body", Provenance::Manual, idx, std::nullopt};
    };
    CHECK_NOTHROW(HeuristicSet({h("Semantic", 0), h("Syntactic", 1)}, "giver"));
    CHECK_THROWS_AS(HeuristicSet({h("Semantic", 0), h("semantic", 1)}, "giver"), PreconditionError);
    CHECK_THROWS_AS(HeuristicSet({h("Semantic", 0), h("Syntactic", 0)}, "giver"), PreconditionError);
    CHECK_THROWS_AS(HeuristicSet({h("", 0)}, "giver"), PreconditionError);
    auto bad = h("Semantic", 0);
    bad.body = " ";
    CHECK_THROWS_AS(HeuristicSet({bad}, "giver"), PreconditionError);
    bad = h("Semantic", 0);
    bad.eval_accuracy = 1.5;
    CHECK_THROWS_AS(HeuristicSet({bad}, "giver"), PreconditionError);
}

TEST_CASE("EAEScores recomputed from arbitrary counts match the formula") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> d(0, 50);
    for (int i = 0; i < 2000; ++i) {
        MatchCounts c{d(rng), d(rng), d(rng), 0, d(rng), d(rng)};
        c.tp_c = std::min<std::int64_t>(c.tp_i, d(rng));
        const auto s = EAEScores::from_counts(c);
        CHECK(std::abs(s.arg_i.f1 - testing::oracle_f1(c.tp_i, c.fp_i, c.fn_i)) < 1e-12);
        CHECK(std::abs(s.arg_c.f1 - testing::oracle_f1(c.tp_c, c.fp_c, c.fn_c)) < 1e-12);
        CHECK(s.counts == c);
    }
}

TEST_CASE("prf_from_counts is zero on empty denominators") {
    const auto p = prf_from_counts(0, 0, 0);
    CHECK(p.precision == 0.0);
    CHECK(p.recall == 0.0);
    CHECK(p.f1 == 0.0);
    const auto q = prf_from_counts(1, 1, 1);
    CHECK(q.f1 == doctest::Approx(0.5));
}

TEST_CASE("instances and heuristics survive a JSON round trip") {
    const auto inst = rams_instance();
    const auto back = eae_instance_from_json(to_json(inst));
    CHECK(back.id == inst.id);
    CHECK(back.trigger->char_start == 17);
    CHECK(back.gold == inst.gold);
    Heuristic h{"Syntactic", "The [giver] ...", Provenance::Generated, 2, 0.3369};
    const auto hb = heuristic_from_json(to_json(h));
    CHECK(hb.label == h.label);
    CHECK(hb.provenance == Provenance::Generated);
    CHECK(*hb.eval_accuracy == doctest::Approx(0.3369));
    CHECK_THROWS_AS(heuristic_from_json(Json{{"label", "x"}}), DataError);
    CHECK(format_fraction(0.33691) == "0.3369");
}
