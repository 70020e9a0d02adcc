#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "hdloa/json_io.hpp"
#include "hdloa/llm.hpp"

#include <cstdlib>

namespace hdloa::llm {

namespace {

bool is_transient_transport(httplib::Error err) {
    switch (err) {
        case httplib::Error::Connection:
        case httplib::Error::Read:
        case httplib::Error::Write:
        case httplib::Error::ConnectionTimeout:
            return true;
        default:
            return false;
    }
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("http backend: base_url is empty");
    const char* key = config_.api_key_env.empty() ? nullptr : std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
        throw ConfigError("http backend: credential variable '" + config_.api_key_env + "' is not set");
    }
    api_key_ = key;
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const {
    return "http:" + config_.base_url + config_.path;
}

std::string HttpBackend::invoke(const CompletionRequest& request) {
    httplib::Client cli(config_.base_url);
    cli.set_connection_timeout(config_.timeout_seconds, 0);
    cli.set_read_timeout(config_.timeout_seconds, 0);
    cli.set_write_timeout(config_.timeout_seconds, 0);
    cli.set_bearer_token_auth(api_key_);

    Json body;
    body["model"] = request.model_id;
    body["prompt"] = request.prompt;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;

    auto res = cli.Post(config_.path, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        throw TransportError("http backend: " + httplib::to_string(err), is_transient_transport(err));
    }
    if (res->status < 200 || res->status >= 300) {
        std::string snippet = res->body.substr(0, 300);
        throw TransportError("http backend: status " + std::to_string(res->status) + ": " + snippet,
                             is_transient_status(res->status), res->status);
    }
    return extract_field(res->body, config_.response_field);
}

}  // namespace hdloa::llm
