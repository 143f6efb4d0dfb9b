#include <doctest.h>

#include <map>

#include "../support/tempdir.hpp"
#include "logitrank/config.hpp"
#include "logitrank/io.hpp"

using namespace logitrank;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected logitrank::Error");
    return Errc::io;
}

}  // namespace

TEST_CASE("defaults") {
    const auto c = parse_config("{}");
    CHECK(c.rerank.window_size == 20);
    CHECK(c.rerank.step == 10);
    CHECK(c.rerank.mode == DecodeMode::first_token);
    CHECK(c.backend == BackendKind::mock);
    CHECK(c.feedback.loss_kind == feedback::LossKind::ranknet);
    CHECK(c.feedback.learning_rate == 0.001);
    CHECK(c.feedback.steps == 20);
    CHECK(c.seed == 42);
}

TEST_CASE("every documented key is read") {
    const auto c = parse_config(R"({
        "seed": 7, "run_tag": "x", "workers": 3,
        "rerank": {"window_size": 10, "step": 5, "mode": "sequence", "top_k": 50},
        "backend": {"kind": "http", "endpoint": "http://h:1/v1/completions", "token": "t", "model": "m",
                    "timeout_ms": 1500, "retries": 4, "backoff_ms": 20, "top_logprobs": 20, "fill_missing": false},
        "prompt": {"system_text": "S", "per_passage_format": "[{id}] {passage}", "instruction_suffix": "I",
                   "max_passage_chars": 100},
        "feedback": {"loss": "combined", "learning_rate": 0.01, "steps": 5, "kl_learning_rate": 0.1,
                     "kl_steps": 7, "depth": 50, "retrieve_k": 200, "composition": "summed",
                     "pair_sign": "literal"},
        "cost_model": {"prefill_cost_per_token": 0.5, "decode_cost_per_token": 2}
    })");
    CHECK(c.seed == 7);
    CHECK(c.run_tag == "x");
    CHECK(c.workers == 3);
    CHECK(c.rerank.window_size == 10);
    CHECK(c.rerank.step == 5);
    CHECK(c.rerank.mode == DecodeMode::sequence);
    CHECK(c.rerank.top_k == 50);
    CHECK(c.backend == BackendKind::http);
    CHECK(c.http.endpoint == "http://h:1/v1/completions");
    CHECK(c.http.auth_token == "t");
    CHECK(c.http.model == "m");
    CHECK(c.http.timeout == std::chrono::milliseconds(1500));
    CHECK(c.http.retries == 4);
    CHECK(c.http.backoff == std::chrono::milliseconds(20));
    CHECK(c.http.top_logprobs == 20);
    CHECK_FALSE(c.http.fill_missing);
    CHECK(c.http.prompt.system_text == "S");
    CHECK(c.http.prompt.max_passage_chars == 100);
    CHECK(c.feedback.loss_kind == feedback::LossKind::combined);
    CHECK(c.feedback.learning_rate == 0.01);
    CHECK(c.feedback.steps == 5);
    CHECK(c.feedback.kl_learning_rate == 0.1);
    CHECK(c.feedback.kl_steps == 7);
    CHECK(c.feedback_depth == 50);
    CHECK(c.retrieve_k == 200);
    CHECK(c.feedback.composition == feedback::Composition::summed);
    CHECK(c.feedback.pair_sign == ltr::PairSign::literal);
    CHECK(c.cost_model.prefill_cost_per_token == 0.5);
    CHECK(c.cost_model.decode_cost_per_token == 2.0);
}

TEST_CASE("invalid configuration is rejected") {
    for (const char* bad : {
             "{not json",
             R"({"rerank": {"window_size": 30}})",
             R"({"rerank": {"window_size": 10, "step": 0}})",
             R"({"rerank": {"mode": "beam"}})",
             R"({"backend": {"kind": "grpc"}})",
             R"({"feedback": {"loss": "hinge"}})",
             R"({"feedback": {"steps": 0}})",
             R"({"feedback": {"learning_rate": -1}})",
             R"({"feedback": {"composition": "mixed"}})",
             R"({"cost_model": {"decode_cost_per_token": -1}})",
             R"({"seed": "seven"})",
         }) {
        CAPTURE(bad);
        CHECK(code_of([&] { parse_config(bad); }) == Errc::config);
    }
}

TEST_CASE("environment overrides the file") {
    testing_support::TempDir dir;
    io::atomic_write(dir / "c.json", R"({"backend": {"endpoint": "http://file:1/x", "token": "filetoken", "retries": 1}})");
    auto c = load_config(dir / "c.json");
    CHECK(c.http.endpoint == "http://file:1/x");

    apply_env(c, env_of({{"LOGITRANK_ENDPOINT", "http://env:2/x"}, {"LOGITRANK_RETRIES", "6"}}));
    CHECK(c.http.endpoint == "http://env:2/x");
    CHECK(c.http.retries == 6);
    CHECK(c.http.auth_token == "filetoken");

    apply_env(c, env_of({{"LOGITRANK_API_TOKEN", "envtoken"}, {"LOGITRANK_TIMEOUT_MS", "900"}}));
    CHECK(c.http.auth_token == "envtoken");
    CHECK(c.http.timeout == std::chrono::milliseconds(900));

    CHECK(code_of([&] { apply_env(c, env_of({{"LOGITRANK_RETRIES", "many"}})); }) == Errc::config);
    CHECK(code_of([&] { load_config(dir / "missing.json"); }) == Errc::io);
}

TEST_CASE("describe_config redacts the token") {
    auto c = parse_config(R"({"backend": {"token": "hunter2"}})");
    const auto text = describe_config(c);
    CHECK(text.find("hunter2") == std::string::npos);
    CHECK(text.find("window_size") != std::string::npos);
}

TEST_CASE("name parsing") {
    CHECK(parse_backend_kind("mock") == BackendKind::mock);
    CHECK(to_string(BackendKind::http) == "http");
    for (auto k : {feedback::LossKind::ranknet, feedback::LossKind::kl, feedback::LossKind::combined}) {
        CHECK(parse_loss_kind(to_string(k)) == k);
    }
    CHECK(code_of([] { parse_loss_kind("nope"); }) == Errc::config);
}
