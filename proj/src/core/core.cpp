#include "logitrank/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace logitrank {

std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::window_too_large: return "window-too-large";
        case Errc::parse: return "parse";
        case Errc::config: return "config";
        case Errc::precondition: return "precondition";
        case Errc::length_mismatch: return "length-mismatch";
        case Errc::dimension_mismatch: return "dimension-mismatch";
        case Errc::invalid_target: return "invalid-target";
        case Errc::backend_unavailable: return "backend-unavailable";
        case Errc::missing_logit: return "missing-logit";
        case Errc::malformed_response: return "malformed-response";
        case Errc::non_finite: return "non-finite";
        case Errc::input: return "input";
        case Errc::io: return "io";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

IdentifierToken IdentifierToken::from_index(std::size_t index) {
    if (index >= kMaxWindow) {
        throw Error(Errc::window_too_large,
                    "slot " + std::to_string(index) + " has no identifier (max 26 slots)");
    }
    return IdentifierToken(static_cast<char>('A' + index));
}

IdentifierToken IdentifierToken::from_letter(char letter) {
    if (letter < 'A' || letter > 'Z') {
        throw Error(Errc::parse, std::string("not an identifier letter: '") + letter + "'");
    }
    return IdentifierToken(letter);
}

IdentifierToken identifier_for(std::size_t slot_index) {
    return IdentifierToken::from_index(slot_index);
}

IdentifierToken parse_identifier(std::string_view token_text) {
    auto text = token_text;
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.size() != 1 || text[0] < 'A' || text[0] > 'Z') {
        throw Error(Errc::parse, "not an identifier: \"" + std::string(token_text) + "\"");
    }
    return IdentifierToken::from_letter(text[0]);
}

EmbeddingVector::EmbeddingVector(std::vector<float> components) : components_(std::move(components)) {
    if (components_.empty()) {
        throw Error(Errc::dimension_mismatch, "embedding must have dimension > 0");
    }
    for (float c : components_) {
        if (!std::isfinite(c)) throw Error(Errc::non_finite, "embedding has a non-finite component");
    }
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> data)
    : ids_(std::move(ids)), dim_(dim), data_(std::move(data)) {
    if (dim_ == 0) throw Error(Errc::dimension_mismatch, "embedding matrix dim must be > 0");
    if (data_.size() != ids_.size() * dim_) {
        throw Error(Errc::dimension_mismatch,
                    "embedding matrix body has " + std::to_string(data_.size()) + " values, expected " +
                        std::to_string(ids_.size() * dim_));
    }
    for (float c : data_) {
        if (!std::isfinite(c)) throw Error(Errc::non_finite, "embedding matrix has a non-finite component");
    }
    index_.reserve(ids_.size());
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        if (!index_.emplace(ids_[r], r).second) {
            throw Error(Errc::input, "duplicate embedding id: " + ids_[r]);
        }
    }
}

std::span<const float> EmbeddingMatrix::row(std::size_t r) const {
    return std::span<const float>(data_).subspan(r * dim_, dim_);
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

EmbeddingVector EmbeddingMatrix::vector_at(std::size_t r) const {
    auto span = row(r);
    return EmbeddingVector(std::vector<float>(span.begin(), span.end()));
}

EmbeddingMatrix EmbeddingMatrix::select(std::span<const std::string> ids) const {
    std::vector<float> body;
    body.reserve(ids.size() * dim_);
    for (const auto& id : ids) {
        auto r = find(id);
        if (!r) throw Error(Errc::input, "no embedding for id: " + id);
        auto span = row(*r);
        body.insert(body.end(), span.begin(), span.end());
    }
    return EmbeddingMatrix(std::vector<std::string>(ids.begin(), ids.end()), dim_, std::move(body));
}

namespace {

void check_distinct(const std::vector<Candidate>& entries) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.passage_id.empty()) throw Error(Errc::input, "empty passage id in candidate list");
        if (!seen.insert(e.passage_id).second) {
            throw Error(Errc::input, "duplicate passage id in candidate list: " + e.passage_id);
        }
    }
}

}  // namespace

CandidateList CandidateList::ingest(std::string query_id, std::vector<Candidate> entries) {
    check_distinct(entries);
    std::sort(entries.begin(), entries.end(), [](const Candidate& a, const Candidate& b) {
        if (a.retrieval_score != b.retrieval_score) return a.retrieval_score > b.retrieval_score;
        return a.passage_id < b.passage_id;
    });
    return CandidateList(std::move(query_id), std::move(entries));
}

CandidateList CandidateList::from_ordered(std::string query_id, std::vector<Candidate> entries) {
    check_distinct(entries);
    return CandidateList(std::move(query_id), std::move(entries));
}

LogitVector::LogitVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(Errc::precondition, "logit vector is empty");
    if (values_.size() > kMaxWindow) {
        throw Error(Errc::window_too_large,
                    "logit vector length " + std::to_string(values_.size()) + " outside 1..26");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw Error(Errc::non_finite, "logit vector has a non-finite value");
    }
}

bool is_permutation_of_range(std::span<const std::size_t> order, std::size_t m) {
    if (order.size() != m) return false;
    std::vector<bool> seen(m, false);
    for (std::size_t v : order) {
        if (v >= m || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

Ranking::Ranking(std::vector<std::size_t> order) : order_(std::move(order)) {
    if (!is_permutation_of_range(order_, order_.size())) {
        throw Error(Errc::precondition, "ranking is not a permutation of its slots");
    }
}

Ranking Ranking::identity(std::size_t m) {
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    return Ranking(std::move(order));
}

RankTarget::RankTarget(std::vector<int> ranks) : ranks_(std::move(ranks)) {
    const auto m = ranks_.size();
    std::vector<bool> seen(m, false);
    for (int r : ranks_) {
        if (r < 1 || static_cast<std::size_t>(r) > m || seen[static_cast<std::size_t>(r - 1)]) {
            throw Error(Errc::invalid_target, "ranks must be a permutation of 1..m");
        }
        seen[static_cast<std::size_t>(r - 1)] = true;
    }
}

RankTarget RankTarget::from_ranking(const Ranking& ranking) {
    std::vector<int> ranks(ranking.size());
    for (std::size_t pos = 0; pos < ranking.size(); ++pos) {
        ranks[ranking[pos]] = static_cast<int>(pos + 1);
    }
    return RankTarget(std::move(ranks));
}

}  // namespace logitrank
