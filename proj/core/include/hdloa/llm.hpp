#pragma once

#include "hdloa/error.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <variant>
#include <vector>

namespace hdloa::llm {

struct CompletionRequest {
    std::string model_id;
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::vector<std::string> stop_sequences;
};

struct CompletionResult {
    std::string text;
    bool cached = false;
    std::string backend_id;
    std::int64_t latency_ms = 0;
};

// Throws PreconditionError on an empty prompt, negative temperature or
// non-positive max_tokens.
void validate(const CompletionRequest& request);

// SHA-256 over a length-prefixed encoding of every request field.
std::string cache_key(const CompletionRequest& request);

// SHA-256 of the prompt bytes alone; what mock rules match on.
std::string prompt_digest(std::string_view prompt);

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    // Returns the completion text. Throws TransportError (possibly transient)
    // or ScriptError.
    virtual std::string invoke(const CompletionRequest& request) = 0;
};

// ---------------------------------------------------------------- mock

struct MockRule {
    enum class Match { PromptDigest, Substring };
    Match match = Match::Substring;
    std::string pattern;  // digest hex, or the substring to look for
    std::string response;
};

struct MockScript {
    std::vector<MockRule> rules;  // first match wins
    // Unmatched prompts get this text; nullopt means "fail".
    std::optional<std::string> default_response;

    // {"rules": [{"substring"|"digest": ..., "response": ...}],
    //  "default": "fail" | {"response": ...}}
    static MockScript from_json_text(std::string_view text);
    static MockScript load(const std::filesystem::path& path);
};

class MockBackend final : public Backend {
public:
    explicit MockBackend(MockScript script, std::string id = "mock");

    std::string id() const override { return id_; }
    std::string invoke(const CompletionRequest& request) override;

    std::uint64_t calls() const { return calls_.load(); }
    const MockScript& script() const { return script_; }

private:
    const MockScript script_;
    const std::string id_;
    std::atomic<std::uint64_t> calls_{0};
};

// ---------------------------------------------------------------- http

struct HttpConfig {
    // Scheme, host and optional port, e.g. "https://api.openai.com".
    std::string base_url;
    std::string path = "/v1/completions";
    // Environment variable holding the bearer token.
    std::string api_key_env = "OPENAI_API_KEY";
    // Slash-separated path to the completion text in the response JSON.
    std::string response_field = "choices/0/text";
    int timeout_seconds = 120;
};

// Completion-style JSON POST: {model, prompt, temperature, max_tokens, stop}.
class HttpBackend final : public Backend {
public:
    // Throws ConfigError when the credential variable is unset or empty.
    explicit HttpBackend(HttpConfig config);
    ~HttpBackend() override;

    std::string id() const override;
    std::string invoke(const CompletionRequest& request) override;

private:
    HttpConfig config_;
    std::string api_key_;
};

// Pulls a string out of a JSON document by a "a/0/b" style path. Throws
// BackendError when the path does not resolve to a string.
std::string extract_field(std::string_view json_text, std::string_view field_path);

// True for statuses the retry loop may re-send after (429 and 5xx).
bool is_transient_status(int status);

// ---------------------------------------------------------------- cache

struct CacheStats {
    std::size_t entries = 0;
    std::uintmax_t bytes = 0;
};

// One JSON file per key: {key, request, response, timestamp}. Writes are
// atomic renames; rewriting a key with identical content is harmless.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const CompletionRequest& request, const std::string& response);
    CacheStats stats() const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path path_for(const std::string& key) const;
    std::filesystem::path dir_;
};

// ---------------------------------------------------------------- client

struct RetryPolicy {
    int max_retries = 4;  // re-sends after the first attempt
    std::chrono::milliseconds base_delay{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{30000};
};

struct ClientStats {
    std::uint64_t requests = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t backend_calls = 0;
    std::uint64_t retries = 0;
};

struct ClientOptions {
    RetryPolicy retry;
    std::size_t max_parallel = 4;
    std::optional<std::filesystem::path> cache_dir;
    // Replaced in tests so backoff does not actually sleep.
    std::function<void(std::chrono::milliseconds)> sleep;
};

class Client {
public:
    Client(std::shared_ptr<Backend> backend, ClientOptions options = {});

    // Serves temperature-0 requests from the cache when possible, otherwise
    // calls the backend under the in-flight bound, retrying transient
    // failures with exponential backoff.
    CompletionResult complete(const CompletionRequest& request);

    ClientStats stats() const;
    Backend& backend() { return *backend_; }
    const ResponseCache* cache() const { return cache_ ? &*cache_ : nullptr; }

private:
    std::string call_with_retries(const CompletionRequest& request);

    std::shared_ptr<Backend> backend_;
    ClientOptions options_;
    std::optional<ResponseCache> cache_;
    std::counting_semaphore<4096> in_flight_;
    std::atomic<std::uint64_t> requests_{0}, cache_hits_{0}, backend_calls_{0}, retries_{0};
};

}  // namespace hdloa::llm
