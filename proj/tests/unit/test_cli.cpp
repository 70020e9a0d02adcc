#include "hdloa/experiment.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

using namespace hdloa;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char ch : s) q += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
    return q + "'";
}

CliResult cli(const testing::ScratchDir& dir, const std::vector<std::string>& args) {
    std::string cmd = quote(HDLOA_CLI_PATH);
    for (const auto& a : args) cmd += " " + quote(a);
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = util::read_file(out);
    r.err = util::read_file(err);
    return r;
}

std::string fixture(const std::string& name) { return (testing::fixture_dir() / name).string(); }

// The fixture run config with absolute paths and scratch outputs.
std::string write_config(const testing::ScratchDir& dir, const std::string& mock, Json extra = Json::object()) {
    Json j = Json::parse(testing::read_fixture("rams_run.json"));
    j["dataset"]["path"] = fixture("rams_fixtures.jsonl");
    j["backend"]["script"] = mock;
    j["template_dir"] = testing::template_dir().string();
    j["output"] = (dir / "report.json").string();
    j["cache_dir"] = (dir / "cache").string();
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return dir.write("run.json", j.dump(2)).string();
}

}  // namespace

TEST_CASE("run succeeds with exit code 0 and writes the report") {
    testing::ScratchDir dir;
    const auto r = cli(dir, {"run", "--config", write_config(dir, fixture("rams_mock.json"))});
    CHECK(r.code == 0);
    CHECK(r.out.find("Arg-C") != std::string::npos);
    const auto bundle = experiment::ReportBundle::load(dir / "report.json");
    CHECK(bundle.aggregate.at("scores").at("counts").at("tp_c") == 5);

    const auto rep = cli(dir, {"report", (dir / "report.json").string(), "--format", "markdown"});
    CHECK(rep.code == 0);
    CHECK(rep.out.find("|") != std::string::npos);
}

TEST_CASE("configuration problems exit with 1") {
    testing::ScratchDir dir;
    CHECK(cli(dir, {"run", "--config", write_config(dir, fixture("rams_mock.json"), {{"temprature", 0}})}).code == 1);
    CHECK(cli(dir, {"run", "--config", (dir / "absent.json").string()}).code == 1);
    CHECK(cli(dir, {}).code == 1);
    CHECK(cli(dir, {"run"}).code == 1);
    const auto r = cli(dir, {"run", "--config", write_config(dir, fixture("rams_mock.json"), {{"k", 0}})});
    CHECK(r.code == 1);
    CHECK(r.err.find("k must be") != std::string::npos);
}

TEST_CASE("data problems exit with 2") {
    testing::ScratchDir dir;
    CHECK(cli(dir, {"data", "validate", "--task", "rams", "--path", fixture("rams_fixtures.jsonl")}).code == 0);
    CHECK(cli(dir, {"data", "validate", "--task", "rams", "--path", fixture("rams_fixtures.jsonl"), "--expect", "4"})
              .code == 2);
    CHECK(cli(dir, {"data", "validate", "--task", "rams", "--path", (dir / "none.jsonl").string()}).code == 2);
    dir.write("broken.jsonl", "{\"id\": \"x\"\n");
    CHECK(cli(dir, {"data", "validate", "--task", "sst2", "--path", (dir / "broken.jsonl").string()}).code == 2);
    CHECK(cli(dir, {"compare", (dir / "none.json").string(), (dir / "none.json").string()}).code == 2);
}

TEST_CASE("backend failures exit with 3 after writing the partial report") {
    testing::ScratchDir dir;
    auto script = Json::parse(testing::read_fixture("rams_mock.json"));
    script["rules"].erase(1);
    const auto mock = dir.write("partial.json", script.dump()).string();
    const auto r = cli(dir, {"run", "--config", write_config(dir, mock)});
    CHECK(r.code == 3);
    CHECK(std::filesystem::exists(dir / "report.json"));
}

TEST_CASE("prompt build prints the same text as the library") {
    testing::ScratchDir dir;
    const auto r = cli(dir, {"prompt", "build", "--task", "rams", "--data", fixture("rams_fixtures.jsonl"),
                             "--target-id", "rams-002", "--templates", testing::template_dir().string(), "--out",
                             (dir / "prompt.txt").string()});
    REQUIRE(r.code == 0);
    CHECK(util::read_file(dir / "prompt.txt") == util::read_file(testing::golden_dir() / "rams_hdloa.txt"));
    CHECK(cli(dir, {"prompt", "build", "--task", "rams", "--data", fixture("rams_fixtures.jsonl"), "--target-id",
                    "rams-999", "--templates", testing::template_dir().string()})
              .code == 2);
    CHECK(cli(dir, {"prompt", "build", "--task", "rams", "--style", "cot", "--ablation", "no_loa", "--data",
                    fixture("rams_fixtures.jsonl"), "--target-id", "rams-002"})
              .code == 1);
}

TEST_CASE("score prints Arg-I and Arg-C for a predictions file") {
    testing::ScratchDir dir;
    const auto pred = dir.write("pred.jsonl",
                                R"({"instance_id": "rams-001", "predictions": {"place": ["Syria"]}})"
                                "\n");
    const auto r = cli(dir, {"score", "--pred", pred.string(), "--gold", fixture("rams_fixtures.jsonl"), "--format",
                             "json"});
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK(j.contains("policy"));
    CHECK(cli(dir, {"score", "--pred", pred.string(), "--gold", fixture("rams_fixtures.jsonl"), "--format", "xml"})
              .code == 1);
}

TEST_CASE("compare prints deltas for two real reports") {
    testing::ScratchDir a, b;
    REQUIRE(cli(a, {"run", "--config", write_config(a, fixture("rams_mock.json"))}).code == 0);
    REQUIRE(cli(b, {"run", "--config", write_config(b, fixture("rams_mock.json"), {{"ablation", "no_loa"}})}).code == 0);
    const auto r = cli(a, {"compare", (a / "report.json").string(), (b / "report.json").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("+0.00") != std::string::npos);
}
