#include "logitrank/http_backend.hpp"

#include <httplib.h>

#include <json.hpp>
#include <thread>

namespace logitrank {

using json = nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const auto& url = config_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::config, "endpoint must be an absolute URL: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http") {
        throw Error(Errc::config, "unsupported endpoint scheme '" + scheme + "' (only http is built in)");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    endpoint_.scheme_host_port = url.substr(0, path_start);
    endpoint_.path = path_start == std::string::npos ? "/v1/completions" : url.substr(path_start);
    if (config_.retries < 0) throw Error(Errc::config, "retries must be >= 0");
    if (config_.top_logprobs < 1) throw Error(Errc::config, "top_logprobs must be >= 1");
}

std::string HttpBackend::post_with_retry(const std::string& body) const {
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(config_.backoff * (1 << (attempt - 1)));

        httplib::Client client(endpoint_.scheme_host_port);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_write_timeout(config_.timeout);
        if (!config_.auth_token.empty()) client.set_bearer_token_auth(config_.auth_token);

        auto res = client.Post(endpoint_.path, body, "application/json");
        if (!res) {
            last_error = "transport: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return res->body;
        last_error = "HTTP " + std::to_string(res->status);
        if (res->status != 429 && res->status < 500) break;
    }
    throw Error(Errc::backend_unavailable,
                config_.endpoint + " failed after " + std::to_string(config_.retries + 1) +
                    " attempt(s): " + last_error);
}

CompletionResult parse_completion_response(std::string_view body) {
    CompletionResult out;
    try {
        const auto doc = json::parse(body);
        const auto& choice = doc.at("choices").at(0);
        if (choice.contains("text")) {
            out.text = choice.at("text").get<std::string>();
        } else if (choice.contains("message")) {
            out.text = choice.at("message").at("content").get<std::string>();
        }
        if (!choice.contains("logprobs") || choice.at("logprobs").is_null()) return out;
        const auto& lp = choice.at("logprobs");
        if (lp.contains("top_logprobs") && !lp.at("top_logprobs").empty()) {
            for (const auto& [token, value] : lp.at("top_logprobs").at(0).items()) {
                out.first_position_logprobs.emplace_back(token, value.get<double>());
            }
        } else if (lp.contains("content") && !lp.at("content").empty()) {
            for (const auto& entry : lp.at("content").at(0).at("top_logprobs")) {
                out.first_position_logprobs.emplace_back(entry.at("token").get<std::string>(),
                                                         entry.at("logprob").get<double>());
            }
        }
    } catch (const json::exception& e) {
        throw Error(Errc::malformed_response, std::string("completion response: ") + e.what());
    }
    return out;
}

WindowResponse HttpBackend::rank_window(const Query& query, std::span<const Passage> passages, DecodeMode mode) {
    check_window_size(passages.size());
    const auto m = passages.size();

    json request = {
        {"prompt", config_.prompt.render(query, passages)},
        {"max_tokens", mode == DecodeMode::first_token ? 1 : static_cast<int>(4 * m)},
        {"temperature", 0},
        {"logprobs", config_.top_logprobs},
    };
    if (!config_.model.empty()) request["model"] = config_.model;

    const auto start = std::chrono::steady_clock::now();
    const auto body = post_with_retry(request.dump());
    const auto elapsed = std::chrono::steady_clock::now() - start;

    auto completion = parse_completion_response(body);

    WindowResponse response;
    if (mode != DecodeMode::sequence) {
        response.first_token_logits = assemble_logits(completion.first_position_logprobs, m, config_.fill_missing);
    }
    if (mode != DecodeMode::first_token) {
        response.generated_sequence = parse_sequence_text(completion.text);
    }
    response.decode_token_count = mode == DecodeMode::first_token ? 1 : m;
    response.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed);
    return response;
}

}  // namespace logitrank
