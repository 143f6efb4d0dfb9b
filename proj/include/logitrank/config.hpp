#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "logitrank/backend.hpp"
#include "logitrank/feedback.hpp"
#include "logitrank/http_backend.hpp"
#include "logitrank/reranker.hpp"

namespace logitrank {

enum class BackendKind { mock, http };

/// Everything a command needs. Loaded from a JSON file, then environment
/// variables, then command-line flags, each layer overriding the previous.
struct AppConfig {
    RerankConfig rerank;
    BackendKind backend = BackendKind::mock;
    HttpBackendConfig http;
    feedback::FeedbackConfig feedback;
    TokenCostModel cost_model{0.01, 1.0};
    std::uint64_t seed = 42;
    std::string run_tag = "logitrank";
    std::size_t workers = 1;
    /// Second-stage retrieval depth after feedback.
    std::size_t retrieve_k = 100;
    /// Retrieved passages per query the feedback teacher covers.
    std::size_t feedback_depth = 100;
};

/// Keys (all optional):
///   seed, run_tag, workers
///   rerank:   window_size, step, mode, top_k
///   backend:  kind, endpoint, token, model, timeout_ms, retries, backoff_ms,
///             top_logprobs, fill_missing
///   prompt:   system_text, per_passage_format, instruction_suffix, max_passage_chars
///   feedback: loss, learning_rate, steps, kl_learning_rate, kl_steps,
///             composition, pair_sign, depth, retrieve_k
///   cost_model: prefill_cost_per_token, decode_cost_per_token
AppConfig parse_config(std::string_view json_text);
AppConfig load_config(const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// LOGITRANK_ENDPOINT, LOGITRANK_API_TOKEN, LOGITRANK_TIMEOUT_MS,
/// LOGITRANK_RETRIES.
void apply_env(AppConfig& config, const EnvLookup& env);

BackendKind parse_backend_kind(std::string_view text);
std::string_view to_string(BackendKind kind);
feedback::LossKind parse_loss_kind(std::string_view text);
std::string_view to_string(feedback::LossKind kind);

/// Effective config as JSON, token redacted. Written beside outputs.
std::string describe_config(const AppConfig& config);

}  // namespace logitrank
