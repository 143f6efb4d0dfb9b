#pragma once

// Domain types shared by every module: identifier tokens, queries, passages,
// candidate lists, window logits, rankings and dense embeddings.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace logitrank {

enum class Errc {
    window_too_large,
    parse,
    config,
    precondition,
    length_mismatch,
    dimension_mismatch,
    invalid_target,
    backend_unavailable,
    missing_logit,
    malformed_response,
    non_finite,
    input,
    io,
};

std::string_view to_string(Errc code);

/// Single exception type for the library; `code()` says what went wrong.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);
    Errc code() const noexcept { return code_; }
    /// Message without the error-kind prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

inline constexpr std::size_t kMaxWindow = 26;

/// A single-letter passage label. Slot i in a window is labelled with the
/// i-th letter of the alphabet.
class IdentifierToken {
public:
    static IdentifierToken from_index(std::size_t index);
    static IdentifierToken from_letter(char letter);

    char letter() const noexcept { return letter_; }
    std::size_t index() const noexcept { return static_cast<std::size_t>(letter_ - 'A'); }

    friend bool operator==(IdentifierToken, IdentifierToken) = default;

private:
    explicit IdentifierToken(char letter) : letter_(letter) {}
    char letter_;
};

/// Label for a window slot; throws Errc::window_too_large past Z.
IdentifierToken identifier_for(std::size_t slot_index);

/// Accepts exactly one uppercase letter, surrounding whitespace ignored.
IdentifierToken parse_identifier(std::string_view token_text);

class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<float> components);

    std::size_t dimension() const noexcept { return components_.size(); }
    std::span<const float> components() const noexcept { return components_; }
    float operator[](std::size_t i) const { return components_[i]; }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<float> components_;
};

/// Row-major block of embeddings, one row per id.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> data);

    std::size_t rows() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const float> row(std::size_t r) const;
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> data() const noexcept { return data_; }
    std::optional<std::size_t> find(std::string_view id) const;

    EmbeddingVector vector_at(std::size_t r) const;
    /// Rows selected by id, in the given order.
    EmbeddingMatrix select(std::span<const std::string> ids) const;

    friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
        return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.data_ == b.data_;
    }

private:
    std::vector<std::string> ids_;
    std::size_t dim_ = 0;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Query {
    std::string id;
    std::string text;
    std::optional<EmbeddingVector> embedding;
};

struct Passage {
    std::string id;
    std::string text;
    std::optional<EmbeddingVector> embedding;
};

using Corpus = std::unordered_map<std::string, Passage>;

struct Candidate {
    std::string passage_id;
    double retrieval_score = 0.0;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Candidates for one query. `ingest` enforces the canonical order
/// (descending score, then passage id ascending); the reranker writes
/// entries back in its own order through `from_ordered`.
class CandidateList {
public:
    CandidateList() = default;

    static CandidateList ingest(std::string query_id, std::vector<Candidate> entries);
    static CandidateList from_ordered(std::string query_id, std::vector<Candidate> entries);

    const std::string& query_id() const noexcept { return query_id_; }
    const std::vector<Candidate>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    friend bool operator==(const CandidateList&, const CandidateList&) = default;

private:
    CandidateList(std::string query_id, std::vector<Candidate> entries)
        : query_id_(std::move(query_id)), entries_(std::move(entries)) {}

    std::string query_id_;
    std::vector<Candidate> entries_;
};

/// First-position identifier logits, one per window slot.
class LogitVector {
public:
    explicit LogitVector(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t slot) const { return values_[slot]; }

    friend bool operator==(const LogitVector&, const LogitVector&) = default;

private:
    std::vector<double> values_;
};

/// Window slots ordered best first; always a permutation of 0..m-1.
class Ranking {
public:
    explicit Ranking(std::vector<std::size_t> order);
    static Ranking identity(std::size_t m);

    std::size_t size() const noexcept { return order_.size(); }
    std::span<const std::size_t> order() const noexcept { return order_; }
    std::size_t operator[](std::size_t position) const { return order_[position]; }

    friend bool operator==(const Ranking&, const Ranking&) = default;

private:
    std::vector<std::size_t> order_;
};

/// Ground-truth rank per slot, a permutation of 1..m (1 = most relevant).
class RankTarget {
public:
    explicit RankTarget(std::vector<int> ranks);
    /// Slot at position j of the ranking gets rank j + 1.
    static RankTarget from_ranking(const Ranking& ranking);

    std::size_t size() const noexcept { return ranks_.size(); }
    std::span<const int> ranks() const noexcept { return ranks_; }
    int operator[](std::size_t slot) const { return ranks_[slot]; }

private:
    std::vector<int> ranks_;
};

bool is_permutation_of_range(std::span<const std::size_t> order, std::size_t m);

}  // namespace logitrank
