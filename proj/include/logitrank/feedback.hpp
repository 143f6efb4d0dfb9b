#pragma once

// Test-time relevance feedback: the query embedding is updated by plain
// gradient descent so that inner-product scores over the first-stage
// retrievals follow a reranker's judgment, then retrieval is rerun.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logitrank/core.hpp"
#include "logitrank/ltr.hpp"

namespace logitrank::feedback {

enum class LossKind { ranknet, kl, combined };
enum class Composition { sequential, summed };

struct FeedbackConfig {
    LossKind loss_kind = LossKind::ranknet;
    double learning_rate = 0.001;
    int steps = 20;
    double kl_learning_rate = 0.005;
    int kl_steps = 100;
    /// combined mode: KL phase then RankNet phase, or one loop on the summed
    /// loss using learning_rate/steps.
    Composition composition = Composition::sequential;
    ltr::PairSign pair_sign = ltr::PairSign::penalize_inversions;

    void validate() const;
};

/// s_i = <q, p_i>, accumulated in double.
std::vector<double> student_scores(const EmbeddingVector& query, const EmbeddingMatrix& passages);
std::vector<double> student_scores(std::span<const double> query, const EmbeddingMatrix& passages);

/// Objective and gradient with respect to the query embedding.
struct QueryObjective {
    double value = 0.0;
    std::vector<double> gradient;
};

QueryObjective ranknet_objective(std::span<const double> query, const EmbeddingMatrix& passages,
                                 const RankTarget& target, ltr::PairSign sign = ltr::PairSign::penalize_inversions);
/// KL(softmax(teacher) || softmax(student)).
QueryObjective kl_objective(std::span<const double> query, const EmbeddingMatrix& passages,
                            std::span<const double> teacher_scores);

/// Optional per-step record: losses[t] is the objective before update t,
/// and the last entry is the objective after the final update.
struct Trace {
    std::vector<double> losses;
};

EmbeddingVector ranknet_feedback(const EmbeddingVector& query, const EmbeddingMatrix& passages,
                                 const Ranking& target_order, double learning_rate, int steps,
                                 Trace* trace = nullptr, ltr::PairSign sign = ltr::PairSign::penalize_inversions);

EmbeddingVector kl_feedback(const EmbeddingVector& query, const EmbeddingMatrix& passages,
                            std::span<const double> teacher_scores, double learning_rate, int steps,
                            Trace* trace = nullptr);

EmbeddingVector combined_feedback(const EmbeddingVector& query, const EmbeddingMatrix& passages,
                                  std::span<const double> teacher_ce, const Ranking& teacher_order,
                                  const FeedbackConfig& config, Trace* trace = nullptr);

/// Dispatches on config.loss_kind; throws Errc::config when the teacher a
/// mode needs is absent.
EmbeddingVector run_feedback(const EmbeddingVector& query, const EmbeddingMatrix& passages,
                             const std::optional<Ranking>& teacher_order,
                             const std::optional<std::vector<double>>& teacher_scores, const FeedbackConfig& config);

/// Top-k corpus rows by descending inner product, ties by id ascending.
/// k larger than the corpus returns every row.
CandidateList second_stage_retrieve(const std::string& query_id, const EmbeddingVector& query,
                                    const EmbeddingMatrix& corpus, std::size_t k);

}  // namespace logitrank::feedback
