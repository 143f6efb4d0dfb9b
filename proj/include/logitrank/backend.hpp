#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "logitrank/core.hpp"

namespace logitrank {

enum class DecodeMode { first_token, sequence, both };

std::string_view to_string(DecodeMode mode);
DecodeMode parse_decode_mode(std::string_view text);

/// Listwise prompt layout. Placeholders: `{query}` and `{count}` in the
/// system text and suffix, `{identifier}` and `{passage}` in the per-passage
/// line.
struct PromptTemplate {
    std::string system_text;
    std::string per_passage_format;
    std::string instruction_suffix;
    std::size_t max_passage_chars = 1200;

    static PromptTemplate listwise_default();

    /// Square brackets inside query/passage text are rewritten to
    /// parentheses so the rendered prompt has exactly one `[X]` marker per
    /// slot.
    std::string render(const Query& query, std::span<const Passage> passages) const;
};

/// Counts whitespace-delimited tokens. Stand-in for a real tokenizer in the
/// cost model.
std::size_t whitespace_token_count(std::string_view text);

struct WindowResponse {
    std::optional<LogitVector> first_token_logits;
    std::optional<std::vector<IdentifierToken>> generated_sequence;
    std::size_t decode_token_count = 0;
    std::chrono::nanoseconds wall_time{0};
};

struct TokenCostModel {
    double prefill_cost_per_token = 0.0;
    double decode_cost_per_token = 0.0;

    void validate() const;
};

double simulated_cost(const TokenCostModel& model, std::size_t prompt_tokens, std::size_t decode_tokens);

class Backend {
public:
    virtual ~Backend() = default;

    /// 1 <= passages.size() <= 26.
    virtual WindowResponse rank_window(const Query& query, std::span<const Passage> passages,
                                       DecodeMode mode) = 0;

    /// False when calls must be serialized; the engine then queues them.
    virtual bool concurrent_safe() const { return true; }
    virtual std::string name() const = 0;
};

/// |T(q) ∩ T(p)| / (1 + |T(q)|) over lowercase whitespace-token sets.
double mock_oracle_score(const Query& query, const Passage& passage);

/// Deterministic stand-in for an LLM reranker. Logits are the oracle scores
/// and the generated sequence is their stable descending argsort.
class MockBackend final : public Backend {
public:
    WindowResponse rank_window(const Query& query, std::span<const Passage> passages,
                               DecodeMode mode) override;
    std::string name() const override { return "mock"; }
};

void check_window_size(std::size_t m);

/// Builds a window's LogitVector from one decoded position's top-K
/// log-probabilities. Keys are raw token strings; whitespace and bracket
/// decoration is stripped before matching identifiers. Slots whose
/// identifier is absent get (min returned log-prob - 10) when
/// `fill_missing`; otherwise Errc::missing_logit is thrown.
LogitVector assemble_logits(std::span<const std::pair<std::string, double>> top_logprobs, std::size_t m,
                            bool fill_missing = true);

inline constexpr double kMissingLogitOffset = 10.0;

/// Identifier letters in order of appearance in completion text. A letter
/// counts only when it is not part of a longer word.
std::vector<IdentifierToken> parse_sequence_text(std::string_view completion);

}  // namespace logitrank
