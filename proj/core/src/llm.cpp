#include "hdloa/llm.hpp"

#include "hdloa/json_io.hpp"
#include "hdloa/util.hpp"

#include <algorithm>
#include <charconv>
#include <ctime>
#include <thread>

namespace hdloa::llm {

void validate(const CompletionRequest& request) {
    if (request.prompt.empty()) throw PreconditionError("completion request has an empty prompt");
    if (!(request.temperature >= 0.0)) throw PreconditionError("temperature must be >= 0");
    if (request.max_tokens <= 0) throw PreconditionError("max_tokens must be > 0");
}

namespace {

void append_field(std::string& out, std::string_view name, std::string_view value) {
    out.append(name);
    out.push_back('=');
    out.append(std::to_string(value.size()));
    out.push_back(':');
    out.append(value);
    out.push_back('\n');
}

std::string shortest_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("cannot format double");
    return std::string(buf, end);
}

}  // namespace

std::string cache_key(const CompletionRequest& request) {
    std::string enc = "hdloa-completion-v1\n";
    append_field(enc, "model_id", request.model_id);
    append_field(enc, "prompt", request.prompt);
    append_field(enc, "temperature", shortest_double(request.temperature));
    append_field(enc, "max_tokens", std::to_string(request.max_tokens));
    append_field(enc, "stop_count", std::to_string(request.stop_sequences.size()));
    for (const auto& s : request.stop_sequences) append_field(enc, "stop", s);
    return util::sha256_hex(enc);
}

std::string prompt_digest(std::string_view prompt) {
    return util::sha256_hex(prompt);
}

// ---------------------------------------------------------------- mock

MockScript MockScript::from_json_text(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("mock script is not valid JSON: ") + e.what());
    }
    MockScript script;
    if (auto it = j.find("rules"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("mock script: 'rules' must be an array");
        for (const auto& r : *it) {
            MockRule rule;
            if (r.contains("digest")) {
                rule.match = MockRule::Match::PromptDigest;
                rule.pattern = r.at("digest").get<std::string>();
            } else if (r.contains("substring")) {
                rule.match = MockRule::Match::Substring;
                rule.pattern = r.at("substring").get<std::string>();
            } else {
                throw ConfigError("mock script: each rule needs 'digest' or 'substring'");
            }
            if (!r.contains("response") || !r.at("response").is_string()) {
                throw ConfigError("mock script: each rule needs a string 'response'");
            }
            rule.response = r.at("response").get<std::string>();
            script.rules.push_back(std::move(rule));
        }
    }
    if (auto it = j.find("default"); it != j.end()) {
        if (it->is_string() && it->get<std::string>() == "fail") {
            script.default_response.reset();
        } else if (it->is_object() && it->contains("response")) {
            script.default_response = it->at("response").get<std::string>();
        } else {
            throw ConfigError("mock script: 'default' must be \"fail\" or {\"response\": ...}");
        }
    }
    return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
    return from_json_text(util::read_file(path));
}

MockBackend::MockBackend(MockScript script, std::string id) : script_(std::move(script)), id_(std::move(id)) {}

std::string MockBackend::invoke(const CompletionRequest& request) {
    ++calls_;
    std::string digest;  // computed lazily, at most once
    for (const auto& rule : script_.rules) {
        if (rule.match == MockRule::Match::Substring) {
            if (request.prompt.find(rule.pattern) != std::string::npos) return rule.response;
        } else {
            if (digest.empty()) digest = prompt_digest(request.prompt);
            if (digest == rule.pattern) return rule.response;
        }
    }
    if (script_.default_response) return *script_.default_response;
    if (digest.empty()) digest = prompt_digest(request.prompt);
    throw ScriptError("mock script has no rule for prompt digest " + digest);
}

// ---------------------------------------------------------------- http helpers

std::string extract_field(std::string_view json_text, std::string_view field_path) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw BackendError(std::string("response is not JSON: ") + e.what());
    }
    const Json* cur = &j;
    std::size_t start = 0;
    while (start <= field_path.size()) {
        std::size_t slash = field_path.find('/', start);
        if (slash == std::string_view::npos) slash = field_path.size();
        const std::string part(field_path.substr(start, slash - start));
        if (!part.empty()) {
            if (cur->is_array()) {
                std::size_t idx = 0;
                auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
                if (ec != std::errc() || p != part.data() + part.size() || idx >= cur->size()) {
                    throw BackendError("response field path '" + std::string(field_path) + "' does not resolve");
                }
                cur = &(*cur)[idx];
            } else if (cur->is_object() && cur->contains(part)) {
                cur = &(*cur)[part];
            } else {
                throw BackendError("response field path '" + std::string(field_path) + "' does not resolve");
            }
        }
        start = slash + 1;
    }
    if (!cur->is_string()) throw BackendError("response field '" + std::string(field_path) + "' is not a string");
    return cur->get<std::string>();
}

bool is_transient_status(int status) {
    return status == 429 || (status >= 500 && status <= 599);
}

// ---------------------------------------------------------------- cache

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
    return dir_ / (key + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    const auto p = path_for(key);
    std::error_code ec;
    if (!std::filesystem::exists(p, ec)) return std::nullopt;
    try {
        const Json j = Json::parse(util::read_file(p));
        if (j.value("key", std::string{}) != key) return std::nullopt;
        return j.at("response").get<std::string>();
    } catch (const std::exception&) {
        // Unreadable records are treated as misses and overwritten later.
        return std::nullopt;
    }
}

void ResponseCache::put(const std::string& key, const CompletionRequest& request, const std::string& response) {
    Json j;
    j["key"] = key;
    j["request"] = {{"model_id", request.model_id},
                    {"prompt", request.prompt},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_tokens},
                    {"stop_sequences", request.stop_sequences}};
    j["response"] = response;
    j["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
    util::write_file_atomic(path_for(key), j.dump(2) + "\n");
}

CacheStats ResponseCache::stats() const {
    CacheStats s;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        ++s.entries;
        s.bytes += entry.file_size();
    }
    return s;
}

// ---------------------------------------------------------------- client

Client::Client(std::shared_ptr<Backend> backend, ClientOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.max_parallel, 1, 4096))) {
    if (!backend_) throw ConfigError("llm client needs a backend");
    if (options_.cache_dir) cache_.emplace(*options_.cache_dir);
    if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

CompletionResult Client::complete(const CompletionRequest& request) {
    validate(request);
    ++requests_;
    const auto t0 = std::chrono::steady_clock::now();
    const bool cacheable = cache_ && request.temperature == 0.0;
    std::string key;
    if (cacheable) {
        key = cache_key(request);
        if (auto hit = cache_->get(key)) {
            ++cache_hits_;
            return CompletionResult{std::move(*hit), true, backend_->id(), 0};
        }
    }
    std::string text = call_with_retries(request);
    if (cacheable) cache_->put(key, request, text);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    return CompletionResult{std::move(text), false, backend_->id(), elapsed.count()};
}

std::string Client::call_with_retries(const CompletionRequest& request) {
    auto delay = options_.retry.base_delay;
    for (int attempt = 0;; ++attempt) {
        try {
            in_flight_.acquire();
            struct Release {
                std::counting_semaphore<4096>& s;
                ~Release() { s.release(); }
            } release{in_flight_};
            ++backend_calls_;
            return backend_->invoke(request);
        } catch (const TransportError& e) {
            if (!e.transient() || attempt >= options_.retry.max_retries) {
                throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) + " attempt(s))",
                                     e.transient(), e.status());
            }
        }
        ++retries_;
        options_.sleep(delay);
        const auto next = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(delay.count()) * options_.retry.multiplier));
        delay = std::min(next, options_.retry.max_delay);
    }
}

ClientStats Client::stats() const {
    return ClientStats{requests_.load(), cache_hits_.load(), backend_calls_.load(), retries_.load()};
}

}  // namespace hdloa::llm
