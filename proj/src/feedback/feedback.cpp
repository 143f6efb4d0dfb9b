#include "logitrank/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace logitrank::feedback {

void FeedbackConfig::validate() const {
    if (!(learning_rate >= 0.0) || !(kl_learning_rate >= 0.0) || !std::isfinite(learning_rate) ||
        !std::isfinite(kl_learning_rate)) {
        throw Error(Errc::config, "learning rates must be finite and non-negative");
    }
    if (steps < 1 || kl_steps < 1) throw Error(Errc::config, "step counts must be >= 1");
}

namespace {

std::vector<double> to_double(const EmbeddingVector& v) {
    auto c = v.components();
    return {c.begin(), c.end()};
}

EmbeddingVector to_float(std::span<const double> v) {
    std::vector<float> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return static_cast<float>(x); });
    return EmbeddingVector(std::move(out));
}

void check_dims(std::size_t query_dim, const EmbeddingMatrix& passages) {
    if (query_dim != passages.dim()) {
        throw Error(Errc::dimension_mismatch, "query dim " + std::to_string(query_dim) + " vs passage dim " +
                                                  std::to_string(passages.dim()));
    }
}

// d(loss)/d(q) = sum_i d(loss)/d(s_i) * p_i
std::vector<double> pull_back(std::span<const double> score_grad, const EmbeddingMatrix& passages) {
    std::vector<double> grad(passages.dim(), 0.0);
    for (std::size_t r = 0; r < passages.rows(); ++r) {
        const auto row = passages.row(r);
        for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += score_grad[r] * static_cast<double>(row[d]);
    }
    return grad;
}

using Objective = std::function<QueryObjective(std::span<const double>)>;

std::vector<double> descend(std::vector<double> q, const Objective& objective, double lr, int steps, Trace* trace) {
    if (steps < 1) throw Error(Errc::config, "feedback needs at least one step");
    if (!std::isfinite(lr) || lr < 0.0) throw Error(Errc::config, "learning rate must be finite and >= 0");
    for (int t = 0; t < steps; ++t) {
        auto obj = objective(q);
        const bool finite = std::isfinite(obj.value) &&
                            std::all_of(obj.gradient.begin(), obj.gradient.end(), [](double g) { return std::isfinite(g); });
        if (!finite) throw Error(Errc::non_finite, "non-finite feedback gradient at step " + std::to_string(t));
        if (trace) trace->losses.push_back(obj.value);
        for (std::size_t d = 0; d < q.size(); ++d) q[d] -= lr * obj.gradient[d];
    }
    if (trace) trace->losses.push_back(objective(q).value);
    return q;
}

}  // namespace

std::vector<double> student_scores(std::span<const double> query, const EmbeddingMatrix& passages) {
    check_dims(query.size(), passages);
    std::vector<double> scores(passages.rows());
    for (std::size_t r = 0; r < passages.rows(); ++r) {
        const auto row = passages.row(r);
        double s = 0.0;
        for (std::size_t d = 0; d < query.size(); ++d) s += query[d] * static_cast<double>(row[d]);
        scores[r] = s;
    }
    return scores;
}

std::vector<double> student_scores(const EmbeddingVector& query, const EmbeddingMatrix& passages) {
    return student_scores(to_double(query), passages);
}

QueryObjective ranknet_objective(std::span<const double> query, const EmbeddingMatrix& passages,
                                 const RankTarget& target, ltr::PairSign sign) {
    if (target.size() != passages.rows()) {
        throw Error(Errc::length_mismatch, "target covers " + std::to_string(target.size()) + " passages, have " +
                                               std::to_string(passages.rows()));
    }
    const auto scores = student_scores(query, passages);
    auto loss = ltr::weighted_ranknet(scores, target, true, sign);
    return {loss.value, pull_back(*loss.gradient, passages)};
}

QueryObjective kl_objective(std::span<const double> query, const EmbeddingMatrix& passages,
                            std::span<const double> teacher_scores) {
    if (teacher_scores.size() != passages.rows()) {
        throw Error(Errc::length_mismatch, std::to_string(teacher_scores.size()) + " teacher scores for " +
                                               std::to_string(passages.rows()) + " passages");
    }
    const auto scores = student_scores(query, passages);
    const auto log_p = ltr::log_softmax(teacher_scores);
    const auto log_q = ltr::log_softmax(scores);
    QueryObjective out;
    std::vector<double> score_grad(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double p = std::exp(log_p[i]);
        if (p > 0.0) out.value += p * (log_p[i] - log_q[i]);
        score_grad[i] = std::exp(log_q[i]) - p;
    }
    out.gradient = pull_back(score_grad, passages);
    return out;
}

EmbeddingVector ranknet_feedback(const EmbeddingVector& query, const EmbeddingMatrix& passages,
                                 const Ranking& target_order, double learning_rate, int steps, Trace* trace,
                                 ltr::PairSign sign) {
    check_dims(query.dimension(), passages);
    const auto target = RankTarget::from_ranking(target_order);
    auto q = descend(
        to_double(query),
        [&](std::span<const double> x) { return ranknet_objective(x, passages, target, sign); }, learning_rate,
        steps, trace);
    return to_float(q);
}

EmbeddingVector kl_feedback(const EmbeddingVector& query, const EmbeddingMatrix& passages,
                            std::span<const double> teacher_scores, double learning_rate, int steps, Trace* trace) {
    check_dims(query.dimension(), passages);
    auto q = descend(
        to_double(query), [&](std::span<const double> x) { return kl_objective(x, passages, teacher_scores); },
        learning_rate, steps, trace);
    return to_float(q);
}

EmbeddingVector combined_feedback(const EmbeddingVector& query, const EmbeddingMatrix& passages,
                                  std::span<const double> teacher_ce, const Ranking& teacher_order,
                                  const FeedbackConfig& config, Trace* trace) {
    config.validate();
    if (config.composition == Composition::sequential) {
        const auto after_kl = kl_feedback(query, passages, teacher_ce, config.kl_learning_rate, config.kl_steps, trace);
        return ranknet_feedback(after_kl, passages, teacher_order, config.learning_rate, config.steps, trace,
                                config.pair_sign);
    }
    check_dims(query.dimension(), passages);
    const auto target = RankTarget::from_ranking(teacher_order);
    auto q = descend(
        to_double(query),
        [&](std::span<const double> x) {
            auto kl = kl_objective(x, passages, teacher_ce);
            auto rank = ranknet_objective(x, passages, target, config.pair_sign);
            for (std::size_t d = 0; d < kl.gradient.size(); ++d) kl.gradient[d] += rank.gradient[d];
            kl.value += rank.value;
            return kl;
        },
        config.learning_rate, config.steps, trace);
    return to_float(q);
}

EmbeddingVector run_feedback(const EmbeddingVector& query, const EmbeddingMatrix& passages,
                             const std::optional<Ranking>& teacher_order,
                             const std::optional<std::vector<double>>& teacher_scores, const FeedbackConfig& config) {
    config.validate();
    switch (config.loss_kind) {
        case LossKind::ranknet:
            if (!teacher_order) throw Error(Errc::config, "ranknet feedback needs a teacher ordering");
            return ranknet_feedback(query, passages, *teacher_order, config.learning_rate, config.steps, nullptr,
                                    config.pair_sign);
        case LossKind::kl:
            if (!teacher_scores) throw Error(Errc::config, "kl feedback needs teacher scores");
            return kl_feedback(query, passages, *teacher_scores, config.kl_learning_rate, config.kl_steps);
        case LossKind::combined:
            if (!teacher_order || !teacher_scores) {
                throw Error(Errc::config, "combined feedback needs both a teacher ordering and teacher scores");
            }
            return combined_feedback(query, passages, *teacher_scores, *teacher_order, config);
    }
    throw Error(Errc::config, "unknown feedback loss kind");
}

CandidateList second_stage_retrieve(const std::string& query_id, const EmbeddingVector& query,
                                    const EmbeddingMatrix& corpus, std::size_t k) {
    if (k < 1) throw Error(Errc::precondition, "k must be >= 1");
    const auto scores = student_scores(query, corpus);
    std::vector<std::size_t> rows(corpus.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto& ids = corpus.ids();
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids[a] < ids[b];
    };
    const auto take = std::min(k, rows.size());
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end(), better);
    std::vector<Candidate> entries;
    entries.reserve(take);
    for (std::size_t i = 0; i < take; ++i) entries.push_back({ids[rows[i]], scores[rows[i]]});
    return CandidateList::ingest(query_id, std::move(entries));
}

}  // namespace logitrank::feedback
