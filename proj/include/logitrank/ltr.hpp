#pragma once

// Learning-to-rank losses over per-slot scores, each with an analytic
// gradient d(loss)/d(score_i).

#include <optional>
#include <span>
#include <vector>

#include "logitrank/core.hpp"

namespace logitrank::ltr {

struct LossValue {
    double value = 0.0;
    std::optional<std::vector<double>> gradient;
};

/// Orientation of the pairwise term for a pair with r_i < r_j.
///   penalize_inversions: ln(1 + exp(s_j - s_i)), grows when the less relevant
///                        slot outscores the more relevant one (default).
///   literal:             ln(1 + exp(s_i - s_j)), the orientation with the
///                        operands swapped; kept for comparison runs.
enum class PairSign { penalize_inversions, literal };

/// ln(1 + exp(x)) without overflow.
double softplus(double x);
/// 1 / (1 + exp(-x)) without overflow.
double logistic(double x);

/// Pairwise logistic loss over all pairs with r_i < r_j, weighted by
/// 1 / (r_i + r_j) when `weighted`, else 1.
LossValue weighted_ranknet(std::span<const double> scores, const RankTarget& target, bool weighted = true,
                           PairSign sign = PairSign::penalize_inversions);

/// Pair weights |delta nDCG| from swapping the two slots in the current
/// score order; gains m - r_i, discount 1/log2(1 + position). Weights are
/// treated as constants when differentiating.
LossValue lambdarank(std::span<const double> scores, const RankTarget& target);

/// Top-one ListNet: cross entropy between softmax(-r) and softmax(s).
LossValue listnet(std::span<const double> scores, const RankTarget& target);

/// Sequence negative log-likelihood. `step_logits` is row-major
/// [steps x vocab]; no gradient is produced.
LossValue lm_loss(std::span<const double> step_logits, std::size_t vocab,
                  std::span<const std::size_t> target_token_indices);

struct JointLossConfig {
    double lambda = 10.0;
};

/// lm + lambda * rank. The gradient, when present, is lambda * rank gradient
/// (the language-model term carries none).
LossValue joint_loss(const LossValue& lm, const LossValue& rank, const JointLossConfig& config = {});

/// Numerically stable log(softmax(x)).
std::vector<double> log_softmax(std::span<const double> x);
std::vector<double> softmax(std::span<const double> x);

}  // namespace logitrank::ltr
