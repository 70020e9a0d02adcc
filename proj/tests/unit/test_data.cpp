#include "hdloa/data.hpp"
#include "hdloa/error.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace hdloa;
using hdloa::testing::ScratchDir;

namespace {

const char* kGood =
    R"({"id":"a","document":"X gave Y to Z .","event_type":"gift","trigger":{"text":"gave","char_start":2,"char_end":6},"roles":["giver","recipient"],"gold":{"giver":["X"]}})"
    "\n\n"
    R"({"id":"b","document":"No trigger here .","event_type":"Earthquakes","roles":["Date"],"gold":{}})"
    "\n"
    R"({"id":"c","document":"D","event_type":"E","roles":["r"],"gold":{"r":["D"]},"domain_tag":"cross"})"
    "\n";

}  // namespace

TEST_CASE("load_eae returns well-formed records in file order") {
    ScratchDir dir;
    const auto path = dir.write("eae.jsonl", kGood);
    const auto items = data::load_eae({TaskKind::EaeRams, path, data::Split::Test, 3});
    REQUIRE(items.size() == 3);
    CHECK(items[0].id == "a");
    CHECK(items[1].id == "b");
    CHECK_FALSE(items[1].trigger.has_value());
    CHECK(items[2].domain_tag == "cross");
}

TEST_CASE("load_eae checks expected_count") {
    ScratchDir dir;
    const auto path = dir.write("eae.jsonl", kGood);
    CHECK_THROWS_AS(data::load_eae({TaskKind::EaeRams, path, data::Split::Test, 871}), DataError);
}

TEST_CASE("load_eae names the line and field of a malformed record") {
    ScratchDir dir;
    const auto path = dir.write("bad.jsonl", std::string(kGood) + R"({"id":"d","document":"x","roles":["r"],"gold":{}})" + "\n");
    try {
        data::load_eae({TaskKind::EaeRams, path, data::Split::Test, std::nullopt});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find(":5:") != std::string::npos);
        CHECK(msg.find("event_type") != std::string::npos);
    }
}

TEST_CASE("load_eae rejects instances that break invariants") {
    ScratchDir dir;
    const auto path = dir.write(
        "bad.jsonl",
        R"({"id":"a","document":"X gave Y","event_type":"gift","trigger":{"text":"took","char_start":2,"char_end":6},"roles":["giver"],"gold":{}})"
        "\n");
    CHECK_THROWS_AS(data::load_eae({TaskKind::EaeRams, path, data::Split::Test, std::nullopt}), DataError);
}

TEST_CASE("load_classification handles both record shapes and the closed label set") {
    ScratchDir dir;
    const auto nli = dir.write(
        "snli.jsonl",
        R"({"id":"n1","premise":"A man sleeps.","hypothesis":"A person rests.","gold_label":"it is not possible to tell"})"
        "\n");
    const auto items = data::load_classification({TaskKind::Nli, nli, data::Split::Test, std::nullopt});
    REQUIRE(items.size() == 1);
    CHECK(items[0].gold_label == "it is not possible to tell");
    CHECK(items[0].hypothesis == "A person rests.");

    const auto bad = dir.write("sst.jsonl", R"({"id":"s1","text":"fine","gold_label":"maybe"})" "\n");
    CHECK_THROWS_AS(data::load_classification({TaskKind::Sentiment, bad, data::Split::Test, std::nullopt}),
                    DataError);

    const auto empty = dir.write("empty.jsonl", "");
    CHECK(data::load_classification({TaskKind::Sentiment, empty, data::Split::Test, std::nullopt}).empty());
}

TEST_CASE("loaders refuse the wrong task family and missing files") {
    ScratchDir dir;
    CHECK_THROWS_AS(data::load_eae({TaskKind::Nli, dir / "x", data::Split::Test, std::nullopt}), ConfigError);
    CHECK_THROWS_AS(data::load_eae({TaskKind::EaeRams, dir / "missing.jsonl", data::Split::Test, std::nullopt}),
                    DataError);
}

TEST_CASE("subset_size uses ceil without binary-rounding drift") {
    CHECK(data::subset_size(800, 0.01) == 8);
    CHECK(data::subset_size(5, 0.01) == 1);  // ceil(0.05)
    CHECK(data::subset_size(800, 1.0) == 800);
    CHECK(data::subset_size(7, 0.3) == 3);  // ceil(2.1)
    CHECK(data::subset_size(10, 0.3) == 3);
}

TEST_CASE("sample_subset is seeded, order preserving and duplicate free") {
    std::vector<int> items(800);
    std::iota(items.begin(), items.end(), 0);
    CHECK(data::sample_subset(items, 1.0, 3) == items);
    const auto a = data::sample_subset(items, 0.01, 7);
    const auto b = data::sample_subset(items, 0.01, 7);
    CHECK(a.size() == 8);
    CHECK(a == b);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::set<int>(a.begin(), a.end()).size() == a.size());
    CHECK(data::sample_subset(items, 0.01, 8) != a);
    CHECK(data::sample_subset(std::vector<int>{1, 2, 3, 4, 5}, 0.01, 1).size() == 1);
    CHECK_THROWS_AS(data::sample_subset(std::vector<int>{}, 0.5, 1), PreconditionError);
    CHECK_THROWS_AS(data::sample_subset(items, 0.0, 1), PreconditionError);
    CHECK_THROWS_AS(data::sample_subset(items, 1.5, 1), PreconditionError);
}

TEST_CASE("sample_subset property: size and membership over many draws") {
    for (std::size_t n = 1; n < 60; n += 7) {
        std::vector<std::size_t> items(n);
        std::iota(items.begin(), items.end(), 0);
        for (double f : {0.01, 0.1, 0.25, 0.5, 0.99}) {
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const auto out = data::sample_subset(items, f, seed);
                CHECK(out.size() == static_cast<std::size_t>(std::ceil(f * static_cast<double>(n) - 1e-9)));
                CHECK(std::set<std::size_t>(out.begin(), out.end()).size() == out.size());
                CHECK(std::is_sorted(out.begin(), out.end()));
            }
        }
    }
}

TEST_CASE("the permutation is fixed for a seed") {
    const auto p = util::seeded_permutation(10, 42);
    CHECK(p.size() == 10);
    CHECK(std::set<std::size_t>(p.begin(), p.end()).size() == 10);
    CHECK(p == util::seeded_permutation(10, 42));
}

TEST_CASE("split names parse") {
    CHECK(data::parse_split("dev") == data::Split::Validation);
    CHECK(data::to_string(data::Split::Train) == "train");
    CHECK_THROWS_AS(data::parse_split("holdout"), ConfigError);
}
