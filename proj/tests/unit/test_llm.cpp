#include "hdloa/error.hpp"
#include "hdloa/llm.hpp"
#include "hdloa/util.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <deque>
#include <mutex>
#include <set>
#include <thread>

using namespace hdloa;
using namespace hdloa::llm;
using hdloa::testing::ScratchDir;

namespace {

CompletionRequest request(std::string prompt, double temperature = 0.0) {
    CompletionRequest r;
    r.model_id = "text-davinci-003";
    r.prompt = std::move(prompt);
    r.temperature = temperature;
    return r;
}

// Replays a queue of outcomes: a string is returned, an int is thrown as a
// TransportError with that status.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(std::deque<std::variant<std::string, int>> steps) : steps_(std::move(steps)) {}
    std::string id() const override { return "scripted"; }
    std::string invoke(const CompletionRequest&) override {
        std::lock_guard lock(mu_);
        ++calls;
        auto step = steps_.front();
        if (steps_.size() > 1) steps_.pop_front();
        if (auto* status = std::get_if<int>(&step)) {
            throw TransportError("HTTP " + std::to_string(*status), is_transient_status(*status), *status);
        }
        return std::get<std::string>(step);
    }
    int calls = 0;

private:
    std::mutex mu_;
    std::deque<std::variant<std::string, int>> steps_;
};

std::string oracle_field(std::string_view name, std::string_view value) {
    return std::string(name) + "=" + std::to_string(value.size()) + ":" + std::string(value) + "\n";
}

}  // namespace

TEST_CASE("sha256 matches published test vectors") {
    CHECK(util::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(util::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(util::sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("cache_key hashes a length-prefixed encoding of every field") {
    auto r = request("Q: hi\nA:");
    r.stop_sequences = {"\n\n"};
    const std::string enc = std::string("hdloa-completion-v1\n") + oracle_field("model_id", r.model_id) +
                            oracle_field("prompt", r.prompt) + oracle_field("temperature", "0") +
                            oracle_field("max_tokens", "1024") + oracle_field("stop_count", "1") +
                            oracle_field("stop", "\n\n");
    CHECK(cache_key(r) == util::sha256_hex(enc));
    CHECK(prompt_digest(r.prompt) == util::sha256_hex(r.prompt));
}

TEST_CASE("cache_key separates requests differing in any one field") {
    const auto base = request("prompt");
    std::set<std::string> keys{cache_key(base)};
    auto r = base;
    r.model_id = "gpt-3.5-turbo";
    keys.insert(cache_key(r));
    r = base;
    r.temperature = 0.7;
    keys.insert(cache_key(r));
    r = base;
    r.max_tokens = 512;
    keys.insert(cache_key(r));
    r = base;
    r.stop_sequences = {"x"};
    keys.insert(cache_key(r));
    r = base;
    r.prompt = "prompt ";
    keys.insert(cache_key(r));
    CHECK(keys.size() == 6);
    CHECK(cache_key(base) == cache_key(request("prompt")));
}

TEST_CASE("cache_key does not collide when text moves across field boundaries") {
    auto a = request("b");
    a.model_id = "a";
    auto b = request("");
    b.prompt = "b";
    b.model_id = "a";
    b.stop_sequences = {""};
    CHECK(cache_key(a) != cache_key(b));
    auto c = request("x");
    c.stop_sequences = {"ab", "c"};
    auto d = request("x");
    d.stop_sequences = {"a", "bc"};
    CHECK(cache_key(c) != cache_key(d));
}

TEST_CASE("validate rejects malformed requests") {
    CHECK_THROWS_AS(validate(request("")), PreconditionError);
    CHECK_THROWS_AS(validate(request("x", -0.1)), PreconditionError);
    auto r = request("x");
    r.max_tokens = 0;
    CHECK_THROWS_AS(validate(r), PreconditionError);
}

TEST_CASE("mock script: substring and digest rules, first match wins") {
    const std::string digest = prompt_digest("exact prompt");
    const auto script = MockScript::from_json_text(R"({"rules":[{"digest":")" + digest +
                                                   R"(","response":"by digest"},{"substring":"prompt","response":"by substring"},{"substring":"exact","response":"never"}],"default":"fail"})");
    MockBackend mock(script);
    CHECK(mock.invoke(request("exact prompt")) == "by digest");
    CHECK(mock.invoke(request("another prompt")) == "by substring");
    CHECK(mock.calls() == 2);
}

TEST_CASE("mock script: an unmatched prompt raises ScriptError naming the digest") {
    MockBackend mock(MockScript::from_json_text(R"({"rules":[],"default":"fail"})"));
    try {
        mock.invoke(request("uncovered"));
        FAIL("expected ScriptError");
    } catch (const ScriptError& e) {
        CHECK(std::string(e.what()).find(prompt_digest("uncovered")) != std::string::npos);
    }
    MockBackend fallback(MockScript::from_json_text(R"({"rules":[],"default":{"response":"fallback"}})"));
    CHECK(fallback.invoke(request("uncovered")) == "fallback");
}

TEST_CASE("mock script: malformed scripts are config errors") {
    CHECK_THROWS_AS(MockScript::from_json_text("{"), ConfigError);
    CHECK_THROWS_AS(MockScript::from_json_text(R"({"rules":{}})"), ConfigError);
    CHECK_THROWS_AS(MockScript::from_json_text(R"({"rules":[{"response":"x"}]})"), ConfigError);
    CHECK_THROWS_AS(MockScript::from_json_text(R"({"rules":[{"substring":"x"}]})"), ConfigError);
    CHECK_THROWS_AS(MockScript::from_json_text(R"({"rules":[],"default":3})"), ConfigError);
}

TEST_CASE("temperature-0 requests are served from the cache after the first call") {
    ScratchDir dir;
    auto mock = std::make_shared<MockBackend>(MockScript::from_json_text(R"({"rules":[],"default":{"response":"A"}})"));
    ClientOptions opts;
    opts.cache_dir = dir / "cache";
    Client client(mock, opts);
    for (int i = 0; i < 10; ++i) {
        const auto res = client.complete(request("same"));
        CHECK(res.text == "A");
        CHECK(res.cached == (i > 0));
    }
    CHECK(mock->calls() == 1);
    CHECK(client.stats().cache_hits == 9);
    CHECK(client.cache()->stats().entries == 1);

    // A fresh client over the same directory reuses the entry.
    Client again(mock, opts);
    CHECK(again.complete(request("same")).cached);
    CHECK(mock->calls() == 1);
}

TEST_CASE("nonzero temperature bypasses the cache") {
    ScratchDir dir;
    auto mock = std::make_shared<MockBackend>(MockScript::from_json_text(R"({"rules":[],"default":{"response":"A"}})"));
    ClientOptions opts;
    opts.cache_dir = dir.path();
    Client client(mock, opts);
    client.complete(request("p", 0.7));
    client.complete(request("p", 0.7));
    CHECK(mock->calls() == 2);
    CHECK(client.cache()->stats().entries == 0);
}

TEST_CASE("a cache record whose stored key differs is a miss") {
    ScratchDir dir;
    ResponseCache cache(dir.path());
    const auto r = request("p");
    const auto key = cache_key(r);
    cache.put(key, r, "stored");
    CHECK(cache.get(key) == std::optional<std::string>("stored"));
    // Simulate a collision or tampering: the record claims another key.
    dir.write(key + ".json", R"({"key":"other","response":"wrong"})");
    CHECK_FALSE(cache.get(key).has_value());
    dir.write(key + ".json", "not json");
    CHECK_FALSE(cache.get(key).has_value());
}

TEST_CASE("transient failures are retried with exponential backoff") {
    auto backend = std::make_shared<ScriptedBackend>(std::deque<std::variant<std::string, int>>{503, 429, std::string("ok")});
    std::vector<std::chrono::milliseconds> waits;
    ClientOptions opts;
    opts.retry.base_delay = std::chrono::milliseconds(100);
    opts.sleep = [&](std::chrono::milliseconds d) { waits.push_back(d); };
    Client client(backend, opts);
    CHECK(client.complete(request("p")).text == "ok");
    CHECK(backend->calls == 3);
    CHECK(waits == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100), std::chrono::milliseconds(200)});
    CHECK(client.stats().retries == 2);
}

TEST_CASE("backoff is capped and retries run out") {
    auto backend = std::make_shared<ScriptedBackend>(std::deque<std::variant<std::string, int>>{500});
    std::vector<std::chrono::milliseconds> waits;
    ClientOptions opts;
    opts.retry.max_retries = 3;
    opts.retry.base_delay = std::chrono::milliseconds(1000);
    opts.retry.max_delay = std::chrono::milliseconds(1500);
    opts.sleep = [&](std::chrono::milliseconds d) { waits.push_back(d); };
    Client client(backend, opts);
    CHECK_THROWS_AS(client.complete(request("p")), TransportError);
    CHECK(backend->calls == 4);
    CHECK(waits == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000),
                                                          std::chrono::milliseconds(1500),
                                                          std::chrono::milliseconds(1500)});
}

TEST_CASE("client errors are not retried") {
    auto backend = std::make_shared<ScriptedBackend>(std::deque<std::variant<std::string, int>>{401});
    int sleeps = 0;
    ClientOptions opts;
    opts.sleep = [&](std::chrono::milliseconds) { ++sleeps; };
    Client client(backend, opts);
    try {
        client.complete(request("p"));
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.status() == 401);
        CHECK_FALSE(e.transient());
    }
    CHECK(backend->calls == 1);
    CHECK(sleeps == 0);
    CHECK(is_transient_status(429));
    CHECK(is_transient_status(502));
    CHECK_FALSE(is_transient_status(400));
    CHECK_FALSE(is_transient_status(404));
}

TEST_CASE("script errors are not retried") {
    auto mock = std::make_shared<MockBackend>(MockScript::from_json_text(R"({"rules":[],"default":"fail"})"));
    Client client(mock, {});
    CHECK_THROWS_AS(client.complete(request("p")), ScriptError);
    CHECK(mock->calls() == 1);
}

TEST_CASE("concurrent backend calls stay under max_parallel") {
    class Gauge final : public Backend {
    public:
        std::string id() const override { return "gauge"; }
        std::string invoke(const CompletionRequest&) override {
            const int now = ++active;
            int seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --active;
            return "x";
        }
        std::atomic<int> active{0}, peak{0};
    };
    auto gauge = std::make_shared<Gauge>();
    ClientOptions opts;
    opts.max_parallel = 2;
    Client client(gauge, opts);
    util::parallel_for(24, 8, [&](std::size_t i) { client.complete(request("p" + std::to_string(i))); });
    CHECK(gauge->peak.load() <= 2);
    CHECK(client.stats().backend_calls == 24);
}

TEST_CASE("extract_field walks object keys and array indices") {
    const std::string body = R"({"choices":[{"text":" hello"}],"n":3})";
    CHECK(extract_field(body, "choices/0/text") == " hello");
    CHECK_THROWS_AS(extract_field(body, "choices/1/text"), BackendError);
    CHECK_THROWS_AS(extract_field(body, "n"), BackendError);
    CHECK_THROWS_AS(extract_field("<html>", "choices/0/text"), BackendError);
}

TEST_CASE("the HTTP backend needs its credential") {
    HttpConfig cfg;
    cfg.base_url = "https://example.invalid";
    cfg.api_key_env = "HDLOA_TEST_SURELY_UNSET_KEY";
    ::unsetenv("HDLOA_TEST_SURELY_UNSET_KEY");
    CHECK_THROWS_AS(HttpBackend{cfg}, ConfigError);
}
