#include "logitrank/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace logitrank {

std::string_view to_string(DecodeMode mode) {
    switch (mode) {
        case DecodeMode::first_token: return "first_token";
        case DecodeMode::sequence: return "sequence";
        case DecodeMode::both: return "both";
    }
    return "unknown";
}

DecodeMode parse_decode_mode(std::string_view text) {
    if (text == "first_token" || text == "first") return DecodeMode::first_token;
    if (text == "sequence") return DecodeMode::sequence;
    if (text == "both") return DecodeMode::both;
    throw Error(Errc::config, "unknown decode mode: " + std::string(text));
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

std::string neutralize_brackets(std::string text) {
    std::replace(text.begin(), text.end(), '[', '(');
    std::replace(text.begin(), text.end(), ']', ')');
    return text;
}

std::string truncate_utf8(const std::string& text, std::size_t max_chars) {
    if (text.size() <= max_chars) return text;
    std::size_t cut = max_chars;
    // back off to a code point boundary
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    return text.substr(0, cut);
}

std::unordered_set<std::string> token_set(std::string_view text) {
    std::unordered_set<std::string> out;
    std::string current;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) out.insert(std::move(current));
            current.clear();
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!current.empty()) out.insert(std::move(current));
    return out;
}

}  // namespace

PromptTemplate PromptTemplate::listwise_default() {
    PromptTemplate t;
    t.system_text =
        "You are RankLLM, an intelligent assistant that can rank passages based on their relevancy to the "
        "query.\nI will provide you with {count} passages, each indicated by an alphabetical identifier. "
        "Rank the passages based on their relevance to the search query: {query}.\n\n";
    t.per_passage_format = "[{identifier}] {passage}\n";
    t.instruction_suffix =
        "\nSearch Query: {query}.\nRank the {count} passages above based on their relevance to the search "
        "query. All the passages should be included and listed using identifiers, in descending order of "
        "relevance. The output format should be [] > [], only respond with the ranking results, do not say "
        "any word or explain.\n[";
    t.max_passage_chars = 1200;
    return t;
}

std::string PromptTemplate::render(const Query& query, std::span<const Passage> passages) const {
    check_window_size(passages.size());
    const auto q = neutralize_brackets(query.text);
    const auto count = std::to_string(passages.size());

    std::string out = system_text;
    replace_all(out, "{query}", q);
    replace_all(out, "{count}", count);
    for (std::size_t i = 0; i < passages.size(); ++i) {
        std::string line = per_passage_format;
        replace_all(line, "{identifier}", std::string(1, identifier_for(i).letter()));
        replace_all(line, "{passage}", neutralize_brackets(truncate_utf8(passages[i].text, max_passage_chars)));
        out += line;
    }
    std::string suffix = instruction_suffix;
    replace_all(suffix, "{query}", q);
    replace_all(suffix, "{count}", count);
    out += suffix;
    return out;
}

std::size_t whitespace_token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

void TokenCostModel::validate() const {
    if (!std::isfinite(prefill_cost_per_token) || !std::isfinite(decode_cost_per_token) ||
        prefill_cost_per_token < 0.0 || decode_cost_per_token < 0.0) {
        throw Error(Errc::config, "token costs must be finite and non-negative");
    }
}

double simulated_cost(const TokenCostModel& model, std::size_t prompt_tokens, std::size_t decode_tokens) {
    return static_cast<double>(prompt_tokens) * model.prefill_cost_per_token +
           static_cast<double>(decode_tokens) * model.decode_cost_per_token;
}

double mock_oracle_score(const Query& query, const Passage& passage) {
    const auto q = token_set(query.text);
    const auto p = token_set(passage.text);
    std::size_t overlap = 0;
    for (const auto& t : q) overlap += p.count(t);
    return static_cast<double>(overlap) / (1.0 + static_cast<double>(q.size()));
}

void check_window_size(std::size_t m) {
    if (m == 0) throw Error(Errc::precondition, "window must contain at least one passage");
    if (m > kMaxWindow) {
        throw Error(Errc::window_too_large, "window of " + std::to_string(m) + " passages exceeds 26");
    }
}

WindowResponse MockBackend::rank_window(const Query& query, std::span<const Passage> passages, DecodeMode mode) {
    const auto start = std::chrono::steady_clock::now();
    check_window_size(passages.size());

    std::vector<double> scores;
    scores.reserve(passages.size());
    for (const auto& p : passages) scores.push_back(mock_oracle_score(query, p));

    WindowResponse response;
    if (mode != DecodeMode::sequence) {
        response.first_token_logits = LogitVector(scores);
    }
    if (mode != DecodeMode::first_token) {
        std::vector<std::size_t> order(scores.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        std::vector<IdentifierToken> seq;
        seq.reserve(order.size());
        for (auto slot : order) seq.push_back(identifier_for(slot));
        response.generated_sequence = std::move(seq);
    }
    response.decode_token_count = mode == DecodeMode::first_token ? 1 : passages.size();
    response.wall_time = std::chrono::steady_clock::now() - start;
    return response;
}

namespace {

// Tokenizers decorate pieces with a leading space, "Ġ" (BPE) or "▁"
// (SentencePiece); any of those plus an opening bracket is stripped.
std::optional<std::size_t> identifier_slot(std::string_view token) {
    constexpr std::string_view kSentencePieceSpace = "\xe2\x96\x81";
    constexpr std::string_view kBpeSpace = "\xc4\xa0";
    for (bool stripped = true; stripped && !token.empty();) {
        stripped = false;
        for (auto marker : {kSentencePieceSpace, kBpeSpace, std::string_view(" "), std::string_view("\t"),
                             std::string_view("\n"), std::string_view("[")}) {
            if (token.starts_with(marker)) {
                token.remove_prefix(marker.size());
                stripped = true;
            }
        }
    }
    while (!token.empty() && (std::isspace(static_cast<unsigned char>(token.back())) || token.back() == ']')) {
        token.remove_suffix(1);
    }
    if (token.size() != 1 || token[0] < 'A' || token[0] > 'Z') return std::nullopt;
    return static_cast<std::size_t>(token[0] - 'A');
}

}  // namespace

LogitVector assemble_logits(std::span<const std::pair<std::string, double>> top_logprobs, std::size_t m,
                            bool fill_missing) {
    check_window_size(m);
    if (top_logprobs.empty()) throw Error(Errc::missing_logit, "no log-probabilities returned");

    constexpr double kUnset = -std::numeric_limits<double>::infinity();
    std::vector<double> values(m, kUnset);
    double min_returned = std::numeric_limits<double>::infinity();
    for (const auto& [token, logprob] : top_logprobs) {
        if (!std::isfinite(logprob)) continue;
        min_returned = std::min(min_returned, logprob);
        auto slot = identifier_slot(token);
        if (slot && *slot < m) values[*slot] = std::max(values[*slot], logprob);
    }
    if (!std::isfinite(min_returned)) throw Error(Errc::missing_logit, "no finite log-probabilities returned");

    for (std::size_t slot = 0; slot < m; ++slot) {
        if (values[slot] != kUnset) continue;
        if (!fill_missing) {
            throw Error(Errc::missing_logit,
                        std::string("identifier ") + identifier_for(slot).letter() + " absent from top-K");
        }
        values[slot] = min_returned - kMissingLogitOffset;
    }
    return LogitVector(std::move(values));
}

std::vector<IdentifierToken> parse_sequence_text(std::string_view completion) {
    std::vector<IdentifierToken> out;
    auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
    for (std::size_t i = 0; i < completion.size(); ++i) {
        const char c = completion[i];
        if (c < 'A' || c > 'Z') continue;
        const bool left_ok = i == 0 || !is_alpha(completion[i - 1]);
        const bool right_ok = i + 1 == completion.size() || !is_alpha(completion[i + 1]);
        if (left_ok && right_ok) out.push_back(IdentifierToken::from_letter(c));
    }
    return out;
}

}  // namespace logitrank
