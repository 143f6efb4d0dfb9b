#pragma once

#include <chrono>
#include <string>

#include "logitrank/backend.hpp"

namespace logitrank {

struct HttpBackendConfig {
    /// Full completion URL, e.g. http://localhost:8000/v1/completions.
    std::string endpoint;
    std::string auth_token;
    std::string model;
    std::chrono::milliseconds timeout{30000};
    /// Retries after the first attempt on transport failure or 5xx/429.
    int retries = 3;
    std::chrono::milliseconds backoff{200};
    int top_logprobs = 30;
    bool fill_missing = true;
    PromptTemplate prompt = PromptTemplate::listwise_default();
};

/// Client for an OpenAI-compatible completion server that returns per-position
/// top-K log-probabilities (vLLM, llama.cpp server, TGI with the OpenAI shim).
///
/// Request body:
///   {"model", "prompt", "max_tokens", "temperature": 0, "logprobs": K}
/// max_tokens is 1 in first_token mode and 4*m otherwise. Identifier logits
/// come from the first decoded position; the sequence is parsed from the
/// completion text. Each call opens its own connection, so the backend is
/// safe for concurrent use.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    WindowResponse rank_window(const Query& query, std::span<const Passage> passages,
                               DecodeMode mode) override;
    std::string name() const override { return "http"; }

    const HttpBackendConfig& config() const noexcept { return config_; }

private:
    struct Endpoint {
        std::string scheme_host_port;
        std::string path;
    };

    std::string post_with_retry(const std::string& body) const;

    HttpBackendConfig config_;
    Endpoint endpoint_;
};

/// Pieces of a completion response the backend needs.
struct CompletionResult {
    std::string text;
    std::vector<std::pair<std::string, double>> first_position_logprobs;
};

/// Accepts the completions layout (`choices[0].logprobs.top_logprobs[0]` as a
/// token->logprob object) and the chat layout
/// (`choices[0].logprobs.content[0].top_logprobs` as [{token, logprob}]).
CompletionResult parse_completion_response(std::string_view body);

}  // namespace logitrank
