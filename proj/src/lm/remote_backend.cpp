#include "congen/lm/remote_backend.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace congen::lm {

namespace {

// Splits "http://host:port/prefix" into host, port, and path prefix.
void parse_url(const std::string & url, std::string & host, int & port, std::string & prefix) {
    std::string rest = url;
    port = 80;
    if (rest.rfind("http://", 0) == 0) {
        rest = rest.substr(7);
    } else if (rest.rfind("https://", 0) == 0) {
        throw Error("remote backend supports plain http URLs only: " + url);
    }
    const auto slash = rest.find('/');
    std::string authority = rest.substr(0, slash);
    prefix = slash == std::string::npos ? "" : rest.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    const auto colon = authority.find(':');
    if (colon != std::string::npos) {
        host = authority.substr(0, colon);
        port = std::stoi(authority.substr(colon + 1));
    } else {
        host = authority;
    }
    if (host.empty()) throw Error("remote backend URL has no host: " + url);
}

} // namespace

RemoteBackend::RemoteBackend(Options options) : options_(std::move(options)) {
    if (options_.base_url.empty()) throw Error("remote backend needs a base URL");
    if (options_.attempts < 1) throw Error("remote backend needs at least one attempt");
    parse_url(options_.base_url, host_, port_, path_prefix_);
}

BackendDescriptor RemoteBackend::descriptor() const {
    return {options_.name, BackendKind::completion_only, true};
}

TokenSequence RemoteBackend::tokenize(const std::string & text) const {
    // Whitespace-block segmentation: alternating runs of non-space and space.
    TokenSequence seq;
    seq.text = text;
    seq.vocab_size = 0; // no fixed vocabulary
    std::size_t i = 0;
    while (i < text.size()) {
        const bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
        std::size_t j = i;
        while (j < text.size() &&
               (std::isspace(static_cast<unsigned char>(text[j])) != 0) == space) {
            ++j;
        }
        seq.token_ids.push_back(static_cast<int>(seq.token_ids.size()));
        i = j;
    }
    return seq;
}

std::string RemoteBackend::detokenize(const TokenSequence & seq) const { return seq.text; }

NextTokenDistribution RemoteBackend::next_token_logits(const TokenSequence &,
                                                       const GenerationParams &) const {
    throw CapabilityError("backend " + options_.name +
                          " is completion-only and has no token-level distributions");
}

Completion RemoteBackend::complete(const std::string & prompt,
                                   const GenerationParams & params) const {
    params.validate();

    nlohmann::ordered_json body;
    body["prompt"] = prompt;
    body["max_new_tokens"] = params.max_new_tokens;
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["stop"] = params.stop_sequences;
    body["logprobs"] = true;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char * key = std::getenv("CONGEN_API_KEY")) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    int backoff_ms = options_.backoff_initial_ms;
    for (int attempt = 0; attempt < options_.attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(host_, port_);
        client.set_connection_timeout(options_.connect_timeout_s, 0);
        client.set_read_timeout(options_.read_timeout_s, 0);
        const auto res =
            client.Post(path_prefix_ + "/v1/complete", headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendUnavailable("backend " + options_.name + " rejected the request: status " +
                                     std::to_string(res->status));
        }
        const auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("text")) {
            throw BackendUnavailable("backend " + options_.name + " returned a malformed body");
        }
        Completion out;
        out.text = j["text"].get<std::string>();
        out.truncated = j.value("truncated", false);
        if (j.contains("token_logprobs") && j["token_logprobs"].is_array()) {
            out.token_logprobs = j["token_logprobs"].get<std::vector<double>>();
        }
        return out;
    }
    throw BackendUnavailable("backend " + options_.name + " unreachable after " +
                             std::to_string(options_.attempts) + " attempts (" + last_error + ")");
}

} // namespace congen::lm
