#include "hdloa/error.hpp"
#include "hdloa/json_io.hpp"
#include "hdloa/probe.hpp"
#include "hdloa/util.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace hdloa;
using namespace hdloa::probe;

namespace {

// StrategyQA examples split out of the identification fixture.
std::vector<prompt::Exemplar> fixture_examples() {
    std::vector<prompt::Exemplar> out;
    for (const auto& line : util::split_lines(testing::read_fixture("identify_prompt.txt"))) {
        if (line.starts_with("Q: ")) out.push_back({line.substr(3), "", "", {}, false});
        if (line.starts_with("A: ")) out.back().answer = line.substr(3);
    }
    return out;
}

PoolExample pool_item(std::string id, Category c) {
    PoolExample p;
    p.id = id;
    p.exemplar.question = "question " + id;
    p.exemplar.answer = "answer " + id;
    p.category = c;
    return p;
}

std::vector<PoolExample> five_category_demo() {
    return {pool_item("er1", Category::ER), pool_item("comp1", Category::Comp), pool_item("kb1", Category::KB),
            pool_item("def1", Category::Def), pool_item("chron1", Category::Chron)};
}

std::vector<PoolExample> spare_pool() {
    return {pool_item("def2", Category::Def), pool_item("other1", Category::Other), pool_item("kb2", Category::KB),
            pool_item("comp2", Category::Comp), pool_item("er2", Category::ER), pool_item("chron2", Category::Chron)};
}

std::shared_ptr<llm::MockBackend> replay(const std::string& response) {
    llm::MockScript script;
    script.default_response = response;
    return std::make_shared<llm::MockBackend>(script);
}

}  // namespace

TEST_CASE("the identification prompt lays out examples under the instruction") {
    const prompt::TemplateStore store(testing::template_dir());
    const auto examples = fixture_examples();
    REQUIRE(examples.size() == 6);
    auto expected = testing::read_fixture("identify_prompt.txt");
    if (expected.ends_with('\n')) expected.pop_back();  // files end with a newline, prompts do not
    CHECK(identification_prompt(store, examples) == expected);
    CHECK_THROWS_AS(identification_prompt(store, std::vector<prompt::Exemplar>{}), PreconditionError);
}

TEST_CASE("the six-example identifier output yields labels and one shared link") {
    const auto recs = parse_identification(testing::read_fixture("identify_output.txt"), 6);
    REQUIRE(recs.size() == 6);
    const std::vector<std::string> labels{"empathetic reasoning", "comparison", "knowledge-based",
                                          "comparison", "definition-based", "chronological"};
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(recs[i].example_index == static_cast<int>(i + 1));
        CHECK(recs[i].category_label == labels[i]);
    }
    CHECK(recs[1].shared_with == std::set<int>{4});
    CHECK(recs[3].shared_with == std::set<int>{2});
    for (std::size_t i : {0u, 2u, 4u, 5u}) CHECK(recs[i].shared_with.empty());
    CHECK(count_distinct_heuristics(recs) == 5);
}

TEST_CASE("identification through a mocked client") {
    const prompt::TemplateStore store(testing::template_dir());
    llm::Client client(replay(testing::read_fixture("identify_output.txt")));
    llm::CompletionRequest req;
    req.model_id = "gpt-4";
    const auto recs = identify_prompt_heuristics(client, store, fixture_examples(), req);
    CHECK(count_distinct_heuristics(recs) == 5);
}

TEST_CASE("a single example gives one record with no links") {
    const auto recs = parse_identification("Example 1: The \"definition-based\" heuristic applies.", 1);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].shared_with.empty());
    CHECK(count_distinct_heuristics(recs) == 1);
}

TEST_CASE("identifier output missing an example is an error naming the index") {
    auto text = testing::read_fixture("identify_output.txt");
    text = text.substr(0, text.find("Example 6:"));
    try {
        parse_identification(text, 6);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("example 6") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_identification("Example 1: no quoted name here", 1), ParseError);
    CHECK_THROWS_AS(parse_identification("Example 3: \"x\"", 2), ParseError);
}

TEST_CASE("count_distinct_heuristics is invariant under record permutation") {
    auto recs = parse_identification(testing::read_fixture("identify_output.txt"), 6);
    std::sort(recs.begin(), recs.end(),
              [](const auto& a, const auto& b) { return a.example_index < b.example_index; });
    int perms = 0;
    do {
        CHECK(count_distinct_heuristics(recs) == 5);
        ++perms;
    } while (std::next_permutation(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
        return a.example_index < b.example_index;
    }));
    CHECK(perms == 720);
}

TEST_CASE("label keys and aliases") {
    CHECK(label_key("Comparison heuristic,") == "comparison");
    CHECK(label_key("  \"Chronological   Heuristic\" ") == "chronological");
    const auto aliases = AliasTable::load(testing::template_dir() / "probe" / "aliases.json");
    CHECK(aliases.resolve("comparison heuristic") == Category::Comp);
    CHECK(aliases.resolve("Knowledge-Based") == Category::KB);
    CHECK(aliases.resolve("temporal reasoning") == Category::Chron);
    CHECK_FALSE(aliases.resolve("astrology").has_value());
    CHECK(parse_category("kb") == Category::KB);
    CHECK_THROWS_AS(parse_category("vibes"), ConfigError);
    CHECK(taxonomy().size() == 5);
}

TEST_CASE("single strategy draws one category") {
    std::vector<PoolExample> pool = spare_pool();
    for (int i = 0; i < 4; ++i) pool.push_back(pool_item("c" + std::to_string(i), Category::Comp));
    const auto sp = build_strategy_prompt(pool, 3, Strategy::Single, 1, Category::Comp);
    REQUIRE(sp.examples.size() == 3);
    for (const auto& e : sp.examples) CHECK(e.category == Category::Comp);
    const auto any = build_strategy_prompt(pool, 3, Strategy::Single, 9);
    CHECK(any.examples.front().category == Category::Comp);  // only Comp has 3+
    CHECK_THROWS_AS(build_strategy_prompt(pool, 6, Strategy::Single, 1, Category::Comp), PreconditionError);
}

TEST_CASE("diverse strategy draws pairwise distinct categories") {
    const auto pool = spare_pool();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sp = build_strategy_prompt(pool, 5, Strategy::Diverse, seed);
        std::set<Category> cats;
        for (const auto& e : sp.examples) cats.insert(e.category);
        CHECK(cats.size() == 5);
        CHECK(cats.count(Category::Other) == 0);
        CHECK(sp.rendered == build_strategy_prompt(pool, 5, Strategy::Diverse, seed).rendered);
    }
    try {
        build_strategy_prompt(pool, 6, Strategy::Diverse, 0);
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("6") != std::string::npos);
        CHECK(msg.find("5") != std::string::npos);
    }
}

TEST_CASE("random strategy is seeded") {
    const auto pool = spare_pool();
    const auto a = build_strategy_prompt(pool, 3, Strategy::Random, 4);
    CHECK(a.examples.size() == 3);
    CHECK(a.seed == 4);
    CHECK(a.rendered == build_strategy_prompt(pool, 3, Strategy::Random, 4).rendered);
    CHECK(a.rendered.starts_with("Q: "));
    CHECK_THROWS_AS(build_strategy_prompt(pool, 7, Strategy::Random, 4), PreconditionError);
}

TEST_CASE("deduction removes exactly the named category for every category") {
    const auto demo = five_category_demo();
    const auto pool = spare_pool();
    for (Category remove : taxonomy()) {
        const auto out = deduct_heuristic(demo, remove, pool);
        REQUIRE(out.size() == demo.size());
        std::map<Category, int> counts;
        int changed = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            ++counts[out[i].category];
            if (out[i].id != demo[i].id) ++changed;
        }
        CHECK(counts.count(remove) == 0);
        CHECK(changed == 1);
        CHECK(std::count_if(counts.begin(), counts.end(), [](const auto& kv) { return kv.second == 2; }) == 1);
        CHECK(counts.size() == 4);
    }
}

TEST_CASE("removing Def with a spare KB example") {
    const std::vector<PoolExample> pool{pool_item("kb2", Category::KB)};
    const auto out = deduct_heuristic(five_category_demo(), Category::Def, pool);
    std::multiset<Category> cats;
    for (const auto& e : out) cats.insert(e.category);
    CHECK(cats == std::multiset<Category>{Category::ER, Category::Comp, Category::KB, Category::KB, Category::Chron});
    CHECK(out[3].id == "kb2");
}

TEST_CASE("deduction preconditions") {
    const auto demo = five_category_demo();
    std::vector<PoolExample> no_def(demo.begin(), demo.end());
    no_def.erase(no_def.begin() + 3);
    CHECK_THROWS_AS(deduct_heuristic(no_def, Category::Def, spare_pool()), PreconditionError);
    const std::vector<PoolExample> useless{pool_item("o", Category::Other), pool_item("d", Category::Def)};
    CHECK_THROWS_AS(deduct_heuristic(demo, Category::Def, useless), PreconditionError);
}

TEST_CASE("labelling reproduces a scripted 500-sample partition") {
    const std::vector<std::pair<Category, int>> plan{{Category::ER, 14},  {Category::Comp, 55},  {Category::KB, 125},
                                                     {Category::Def, 47}, {Category::Chron, 91}, {Category::Other, 168}};
    const std::map<Category, std::string> reply_text{{Category::ER, "empathetic reasoning"},
                                                     {Category::Comp, "Comparison heuristic"},
                                                     {Category::KB, "knowledge-based"},
                                                     {Category::Def, "Definition"},
                                                     {Category::Chron, "chronological"},
                                                     {Category::Other, "none of the above"}};
    std::vector<ProbeSample> samples;
    llm::MockScript script;
    for (const auto& [cat, n] : plan) {
        for (int i = 0; i < n; ++i) {
            const std::string id = std::string(to_string(cat)) + "-" + std::to_string(i);
            samples.push_back({id, "Is sample " + id + " answerable?"});
            script.rules.push_back({llm::MockRule::Match::Substring, "Q: Is sample " + id + " answerable?",
                                    "Reasoning first.\nheuristic: " + reply_text.at(cat)});
        }
    }
    const prompt::TemplateStore store(testing::template_dir());
    llm::Client client(std::make_shared<llm::MockBackend>(script), {});
    const auto aliases = AliasTable::load(store.path("probe", "aliases.json"));
    const auto lab = label_samples_by_heuristic(client, store, samples, taxonomy(), aliases, {}, 8);
    for (const auto& [cat, n] : plan) CHECK(lab.groups.at(cat).size() == static_cast<std::size_t>(n));
    CHECK(lab.diagnostics.empty());
    std::size_t total = 0;
    for (const auto& [cat, ids] : lab.groups) total += ids.size();
    CHECK(total == 500);
}

TEST_CASE("unreadable labeller replies land in Other with a diagnostic") {
    llm::MockScript script;
    script.rules.push_back({llm::MockRule::Match::Substring, "Q: good", "heuristic: comparison"});
    script.default_response = "I cannot decide.";
    const prompt::TemplateStore store(testing::template_dir());
    llm::Client client(std::make_shared<llm::MockBackend>(script), {});
    const std::vector<ProbeSample> samples{{"s1", "good"}, {"s2", "garbled"}};
    const auto lab = label_samples_by_heuristic(client, store, samples, taxonomy(), AliasTable{}, {});
    CHECK(lab.groups.at(Category::Other) == std::vector<std::string>{"s1", "s2"});  // no aliases: unresolved
    const auto aliases = AliasTable::load(store.path("probe", "aliases.json"));
    const auto lab2 = label_samples_by_heuristic(client, store, samples, taxonomy(), aliases, {});
    CHECK(lab2.groups.at(Category::Comp) == std::vector<std::string>{"s1"});
    CHECK(lab2.groups.at(Category::Other) == std::vector<std::string>{"s2"});
    REQUIRE(lab2.diagnostics.size() == 1);
    CHECK(lab2.diagnostics[0].find("s2") != std::string::npos);

    const auto empty = label_samples_by_heuristic(client, store, std::vector<ProbeSample>{}, taxonomy(), aliases, {});
    CHECK(empty.groups.size() == 6);
    for (const auto& [cat, ids] : empty.groups) CHECK(ids.empty());
}

TEST_CASE("grouped accuracy") {
    std::map<Category, std::vector<std::string>> groups{{Category::Comp, {"a", "b", "c", "d"}}, {Category::KB, {}}};
    const std::vector<SampleResult> results{{"a", true}, {"b", true}, {"c", false}, {"d", true}};
    const auto acc = grouped_accuracy(results, groups);
    CHECK(acc.at(Category::Comp) == doctest::Approx(0.75));
    CHECK(acc.count(Category::KB) == 0);
    const std::vector<SampleResult> stray{{"zz", true}};
    CHECK_THROWS_AS(grouped_accuracy(stray, groups), DataError);
    groups[Category::KB] = {"a"};
    CHECK_THROWS_AS(grouped_accuracy(results, groups), DataError);
}

TEST_CASE("scripted correctness flags reproduce a grouped accuracy row") {
    // correct / size per group; the sizes follow the labelled partition
    // except ER, which is scaled up because 78.5% is not a fraction of 14.
    const std::vector<std::tuple<Category, int, int, double>> row{
        {Category::ER, 51, 65, 78.5},   {Category::Comp, 40, 55, 72.7},  {Category::KB, 109, 125, 87.2},
        {Category::Def, 40, 47, 85.1},  {Category::Chron, 68, 91, 74.7}, {Category::Other, 110, 168, 65.5}};
    std::map<Category, std::vector<std::string>> groups;
    std::vector<SampleResult> results;
    for (const auto& [cat, correct, size, pct] : row) {
        for (int i = 0; i < size; ++i) {
            const std::string id = std::string(to_string(cat)) + std::to_string(i);
            groups[cat].push_back(id);
            results.push_back({id, i < correct});
        }
    }
    const auto acc = grouped_accuracy(results, groups);
    for (const auto& [cat, correct, size, pct] : row) {
        CHECK(format_fraction(acc.at(cat) * 100.0, 1) == format_fraction(pct, 1));
    }
}

TEST_CASE("group and result files load") {
    testing::ScratchDir dir;
    const auto g = dir.write("groups.jsonl", "{\"sample_id\":\"a\",\"category\":\"Comp\"}\n{\"sample_id\":\"b\",\"category\":\"kb\"}\n");
    const auto r = dir.write("results.jsonl", "{\"sample_id\":\"a\",\"correct\":true}\n{\"sample_id\":\"b\",\"correct\":false}\n");
    const auto groups = load_groups(g);
    CHECK(groups.at(Category::Comp) == std::vector<std::string>{"a"});
    const auto acc = grouped_accuracy(load_results(r), groups);
    CHECK(acc.at(Category::KB) == 0.0);
}
