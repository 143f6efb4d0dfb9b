#include "logitrank/config.hpp"

#include <cstdlib>
#include <json.hpp>

#include "logitrank/io.hpp"

namespace logitrank {

using json = nlohmann::json;

BackendKind parse_backend_kind(std::string_view text) {
    if (text == "mock") return BackendKind::mock;
    if (text == "http") return BackendKind::http;
    throw Error(Errc::config, "unknown backend: " + std::string(text));
}

std::string_view to_string(BackendKind kind) { return kind == BackendKind::mock ? "mock" : "http"; }

feedback::LossKind parse_loss_kind(std::string_view text) {
    if (text == "ranknet") return feedback::LossKind::ranknet;
    if (text == "kl") return feedback::LossKind::kl;
    if (text == "combined") return feedback::LossKind::combined;
    throw Error(Errc::config, "unknown feedback loss: " + std::string(text));
}

std::string_view to_string(feedback::LossKind kind) {
    switch (kind) {
        case feedback::LossKind::ranknet: return "ranknet";
        case feedback::LossKind::kl: return "kl";
        case feedback::LossKind::combined: return "combined";
    }
    return "unknown";
}

namespace {

template <typename T>
void take(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

AppConfig parse_config(std::string_view json_text) {
    AppConfig c;
    try {
        const auto root = json::parse(json_text);
        take(root, "seed", c.seed);
        take(root, "run_tag", c.run_tag);
        take(root, "workers", c.workers);

        if (root.contains("rerank")) {
            const auto& r = root.at("rerank");
            take(r, "window_size", c.rerank.window_size);
            take(r, "step", c.rerank.step);
            take(r, "top_k", c.rerank.top_k);
            if (r.contains("mode")) c.rerank.mode = parse_decode_mode(r.at("mode").get<std::string>());
        }
        if (root.contains("backend")) {
            const auto& b = root.at("backend");
            if (b.contains("kind")) c.backend = parse_backend_kind(b.at("kind").get<std::string>());
            take(b, "endpoint", c.http.endpoint);
            take(b, "token", c.http.auth_token);
            take(b, "model", c.http.model);
            take(b, "retries", c.http.retries);
            take(b, "top_logprobs", c.http.top_logprobs);
            take(b, "fill_missing", c.http.fill_missing);
            if (b.contains("timeout_ms")) c.http.timeout = std::chrono::milliseconds(b.at("timeout_ms").get<long>());
            if (b.contains("backoff_ms")) c.http.backoff = std::chrono::milliseconds(b.at("backoff_ms").get<long>());
        }
        if (root.contains("prompt")) {
            const auto& p = root.at("prompt");
            take(p, "system_text", c.http.prompt.system_text);
            take(p, "per_passage_format", c.http.prompt.per_passage_format);
            take(p, "instruction_suffix", c.http.prompt.instruction_suffix);
            take(p, "max_passage_chars", c.http.prompt.max_passage_chars);
        }
        if (root.contains("feedback")) {
            const auto& f = root.at("feedback");
            if (f.contains("loss")) c.feedback.loss_kind = parse_loss_kind(f.at("loss").get<std::string>());
            take(f, "learning_rate", c.feedback.learning_rate);
            take(f, "steps", c.feedback.steps);
            take(f, "kl_learning_rate", c.feedback.kl_learning_rate);
            take(f, "kl_steps", c.feedback.kl_steps);
            take(f, "depth", c.feedback_depth);
            take(f, "retrieve_k", c.retrieve_k);
            if (f.contains("composition")) {
                const auto v = f.at("composition").get<std::string>();
                if (v == "sequential") c.feedback.composition = feedback::Composition::sequential;
                else if (v == "summed") c.feedback.composition = feedback::Composition::summed;
                else throw Error(Errc::config, "unknown composition: " + v);
            }
            if (f.contains("pair_sign")) {
                const auto v = f.at("pair_sign").get<std::string>();
                if (v == "penalize_inversions") c.feedback.pair_sign = ltr::PairSign::penalize_inversions;
                else if (v == "literal") c.feedback.pair_sign = ltr::PairSign::literal;
                else throw Error(Errc::config, "unknown pair_sign: " + v);
            }
        }
        if (root.contains("cost_model")) {
            const auto& m = root.at("cost_model");
            take(m, "prefill_cost_per_token", c.cost_model.prefill_cost_per_token);
            take(m, "decode_cost_per_token", c.cost_model.decode_cost_per_token);
        }
    } catch (const json::exception& e) {
        throw Error(Errc::config, std::string("config: ") + e.what());
    }
    c.rerank.validate();
    c.feedback.validate();
    c.cost_model.validate();
    return c;
}

AppConfig load_config(const std::filesystem::path& path) {
    try {
        return parse_config(io::read_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

void apply_env(AppConfig& config, const EnvLookup& env) {
    if (auto v = env("LOGITRANK_ENDPOINT")) config.http.endpoint = *v;
    if (auto v = env("LOGITRANK_API_TOKEN")) config.http.auth_token = *v;
    try {
        if (auto v = env("LOGITRANK_TIMEOUT_MS")) config.http.timeout = std::chrono::milliseconds(std::stol(*v));
        if (auto v = env("LOGITRANK_RETRIES")) config.http.retries = std::stoi(*v);
    } catch (const std::logic_error&) {
        throw Error(Errc::config, "LOGITRANK_TIMEOUT_MS / LOGITRANK_RETRIES must be integers");
    }
}

std::string describe_config(const AppConfig& c) {
    json j = {
        {"seed", c.seed},
        {"run_tag", c.run_tag},
        {"workers", c.workers},
        {"rerank",
         {{"window_size", c.rerank.window_size},
          {"step", c.rerank.step},
          {"mode", std::string(to_string(c.rerank.mode))},
          {"top_k", c.rerank.top_k}}},
        {"backend",
         {{"kind", std::string(to_string(c.backend))},
          {"endpoint", c.http.endpoint},
          {"token", c.http.auth_token.empty() ? "" : "<redacted>"},
          {"model", c.http.model},
          {"timeout_ms", c.http.timeout.count()},
          {"retries", c.http.retries},
          {"backoff_ms", c.http.backoff.count()},
          {"top_logprobs", c.http.top_logprobs},
          {"fill_missing", c.http.fill_missing}}},
        {"prompt",
         {{"system_text", c.http.prompt.system_text},
          {"per_passage_format", c.http.prompt.per_passage_format},
          {"instruction_suffix", c.http.prompt.instruction_suffix},
          {"max_passage_chars", c.http.prompt.max_passage_chars}}},
        {"feedback",
         {{"loss", std::string(to_string(c.feedback.loss_kind))},
          {"learning_rate", c.feedback.learning_rate},
          {"steps", c.feedback.steps},
          {"kl_learning_rate", c.feedback.kl_learning_rate},
          {"kl_steps", c.feedback.kl_steps},
          {"composition", c.feedback.composition == feedback::Composition::sequential ? "sequential" : "summed"},
          {"pair_sign", c.feedback.pair_sign == ltr::PairSign::penalize_inversions ? "penalize_inversions" : "literal"},
          {"depth", c.feedback_depth},
          {"retrieve_k", c.retrieve_k}}},
        {"cost_model",
         {{"prefill_cost_per_token", c.cost_model.prefill_cost_per_token},
          {"decode_cost_per_token", c.cost_model.decode_cost_per_token}}},
    };
    return j.dump(2);
}

}  // namespace logitrank
