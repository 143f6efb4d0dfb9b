#include "logitrank/ltr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace logitrank::ltr {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> log_softmax(std::span<const double> x) {
    std::vector<double> out(x.begin(), x.end());
    if (out.empty()) return out;
    const double peak = *std::max_element(out.begin(), out.end());
    double sum = 0.0;
    for (double v : out) sum += std::exp(v - peak);
    const double log_z = peak + std::log(sum);
    for (double& v : out) v -= log_z;
    return out;
}

std::vector<double> softmax(std::span<const double> x) {
    auto out = log_softmax(x);
    for (double& v : out) v = std::exp(v);
    return out;
}

namespace {

void check_lengths(std::span<const double> scores, const RankTarget& target) {
    if (scores.empty()) throw Error(Errc::length_mismatch, "no scores");
    if (scores.size() != target.size()) {
        throw Error(Errc::length_mismatch, std::to_string(scores.size()) + " scores for " +
                                               std::to_string(target.size()) + " target ranks");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw Error(Errc::non_finite, "non-finite score");
    }
}

// Sum over pairs (i more relevant than j) of w_ij * softplus(s_j - s_i),
// with its gradient.
template <typename Weight>
LossValue pairwise_logistic(std::span<const double> scores, const RankTarget& target, PairSign sign,
                            Weight&& weight) {
    const auto m = scores.size();
    LossValue out;
    std::vector<double> grad(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (target[i] >= target[j]) continue;
            const double w = weight(i, j);
            if (w == 0.0) continue;
            // `hi` is the slot whose score rising increases the loss
            const auto [hi, lo] = sign == PairSign::penalize_inversions ? std::pair{j, i} : std::pair{i, j};
            const double diff = scores[hi] - scores[lo];
            out.value += w * softplus(diff);
            const double g = w * logistic(diff);
            grad[hi] += g;
            grad[lo] -= g;
        }
    }
    out.gradient = std::move(grad);
    return out;
}

}  // namespace

LossValue weighted_ranknet(std::span<const double> scores, const RankTarget& target, bool weighted, PairSign sign) {
    check_lengths(scores, target);
    return pairwise_logistic(scores, target, sign, [&](std::size_t i, std::size_t j) {
        return weighted ? 1.0 / static_cast<double>(target[i] + target[j]) : 1.0;
    });
}

LossValue lambdarank(std::span<const double> scores, const RankTarget& target) {
    check_lengths(scores, target);
    const auto m = scores.size();

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<double> discount(m);
    for (std::size_t pos = 0; pos < m; ++pos) discount[order[pos]] = 1.0 / std::log2(static_cast<double>(pos) + 2.0);

    // ideal DCG: gains m-1, m-2, ..., 0 at positions 1..m
    double ideal = 0.0;
    for (std::size_t pos = 0; pos < m; ++pos) {
        ideal += static_cast<double>(m - 1 - pos) / std::log2(static_cast<double>(pos) + 2.0);
    }
    auto gain = [&](std::size_t slot) { return static_cast<double>(static_cast<int>(m) - target[slot]); };

    return pairwise_logistic(scores, target, PairSign::penalize_inversions, [&](std::size_t i, std::size_t j) {
        if (ideal == 0.0) return 0.0;
        return std::abs((gain(i) - gain(j)) * (discount[i] - discount[j])) / ideal;
    });
}

LossValue listnet(std::span<const double> scores, const RankTarget& target) {
    check_lengths(scores, target);
    const auto m = scores.size();
    std::vector<double> neg_ranks(m);
    for (std::size_t i = 0; i < m; ++i) neg_ranks[i] = -static_cast<double>(target[i]);
    const auto p = softmax(neg_ranks);
    const auto log_q = log_softmax(scores);

    LossValue out;
    std::vector<double> grad(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.value -= p[i] * log_q[i];
        grad[i] = std::exp(log_q[i]) - p[i];
    }
    out.gradient = std::move(grad);
    return out;
}

LossValue lm_loss(std::span<const double> step_logits, std::size_t vocab,
                  std::span<const std::size_t> target_token_indices) {
    if (vocab == 0) throw Error(Errc::length_mismatch, "vocabulary size must be > 0");
    const auto steps = target_token_indices.size();
    if (step_logits.size() != steps * vocab) {
        throw Error(Errc::length_mismatch, "logit matrix is not steps x vocab");
    }
    LossValue out;
    for (std::size_t t = 0; t < steps; ++t) {
        const auto target = target_token_indices[t];
        if (target >= vocab) {
            throw Error(Errc::precondition, "target index " + std::to_string(target) + " out of vocabulary");
        }
        const auto row = log_softmax(step_logits.subspan(t * vocab, vocab));
        out.value -= row[target];
    }
    return out;
}

LossValue joint_loss(const LossValue& lm, const LossValue& rank, const JointLossConfig& config) {
    if (!std::isfinite(lm.value) || !std::isfinite(rank.value) || !std::isfinite(config.lambda)) {
        throw Error(Errc::non_finite, "joint loss inputs must be finite");
    }
    LossValue out{lm.value + config.lambda * rank.value, std::nullopt};
    if (rank.gradient) {
        std::vector<double> grad(*rank.gradient);
        for (double& g : grad) g *= config.lambda;
        out.gradient = std::move(grad);
    }
    return out;
}

}  // namespace logitrank::ltr
