#pragma once

// Seeded synthetic data sets used by the acceptance suite and `make-fixture`.
// Every draw comes from one std::mt19937_64 seeded by the caller.

#include <cstdint>
#include <string>
#include <vector>

#include "logitrank/core.hpp"
#include "logitrank/eval.hpp"

namespace logitrank::fixture {

/// Queries are sets of vocabulary words; each candidate passage shares a
/// random number of them (its overlap) and is padded with filler words.
/// Retrieval score is overlap plus Gaussian noise, so retrieval order is a
/// noisy version of the mock oracle's order. Grade: overlap >= 5 -> 2,
/// overlap >= 3 -> 1, else 0.
struct TextOptions {
    std::size_t queries = 200;
    std::size_t candidates_per_query = 100;
    std::size_t query_terms = 6;
    std::size_t passage_terms = 30;
    std::size_t vocabulary = 5000;
    double retrieval_noise = 1.5;
};

struct TextFixture {
    std::vector<Query> queries;
    std::vector<Passage> passages;
    std::vector<CandidateList> candidates;
    eval::Qrels qrels;
};

TextFixture make_text_fixture(std::uint64_t seed, const TextOptions& options = {});

/// Dense retrieval fixture with planted relevant passages. Each query has a
/// hidden intent direction u; its relevant passages sit near u, while the
/// query vector is u rotated away from it until every planted passage ranks
/// between `min_planted_rank` and `retrieve_depth` (1-based) under plain
/// inner-product retrieval.
struct EmbeddingOptions {
    std::size_t dim = 16;
    std::size_t corpus_size = 500;
    std::size_t queries = 20;
    std::size_t relevant_per_query = 4;
    double passage_scale = 3.0;
    double relevant_noise = 0.35;
    std::size_t min_planted_rank = 11;
    std::size_t retrieve_depth = 50;
    /// Cross-encoder teacher: ce_scale * grade + N(0, ce_noise).
    double ce_scale = 4.0;
    double ce_noise = 0.5;
};

struct FeedbackCase {
    std::string query_id;
    EmbeddingVector query;
    /// First-stage top `retrieve_depth` ids, best first.
    std::vector<std::string> retrieved;
    /// Reranker teacher over `retrieved`: relevant passages first, each
    /// group in retrieval order.
    Ranking teacher_order = Ranking::identity(1);
    /// Cross-encoder teacher scores aligned with `retrieved`.
    std::vector<double> teacher_ce;
};

struct EmbeddingFixture {
    EmbeddingMatrix corpus;
    std::vector<FeedbackCase> cases;
    eval::Qrels qrels;

    EmbeddingMatrix query_matrix() const;
};

EmbeddingFixture make_embedding_fixture(std::uint64_t seed, const EmbeddingOptions& options = {});

/// Ideal teacher order over `retrieved`: judged-relevant ids first, then the
/// rest, each group keeping its input order.
Ranking ideal_order(const std::string& query_id, const std::vector<std::string>& retrieved,
                    const eval::Qrels& qrels);

}  // namespace logitrank::fixture
