#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "logitrank/feedback.hpp"

using namespace logitrank;
using namespace logitrank::feedback;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected logitrank::Error");
    return Errc::io;
}

EmbeddingMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<std::string> ids;
    std::vector<float> data;
    for (std::size_t r = 0; r < rows; ++r) {
        ids.push_back("p" + std::to_string(r));
        for (std::size_t d = 0; d < dim; ++d) data.push_back(g(rng));
    }
    return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

std::vector<double> random_query(std::mt19937_64& rng, std::size_t dim) {
    return oracle::uniform_vector(rng, dim, -1.0, 1.0);
}

EmbeddingVector as_embedding(const std::vector<double>& q) {
    return EmbeddingVector(std::vector<float>(q.begin(), q.end()));
}

Ranking random_order(std::mt19937_64& rng, std::size_t m) {
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    return Ranking(order);
}

const EmbeddingMatrix kUnit({"a", "b"}, 2, {1, 0, 0, 1});

}  // namespace

TEST_CASE("student scores are inner products") {
    EmbeddingMatrix m({"a", "b", "c"}, 2, {1, 2, -1, 0, 0.5f, 0.5f});
    const auto s = student_scores(EmbeddingVector({2.0f, 3.0f}), m);
    CHECK(s == std::vector<double>{8.0, -2.0, 2.5});
    CHECK(code_of([&] { student_scores(EmbeddingVector({1.0f}), m); }) == Errc::dimension_mismatch);
}

TEST_CASE("one RankNet step on a two-passage example") {
    // Teacher prefers b; the student currently prefers a by 1.
    Trace trace;
    const auto q = ranknet_feedback(EmbeddingVector({1.0f, 0.0f}), kUnit, Ranking({1, 0}), 1.0, 1, &trace);
    const double sig = 1.0 / (1.0 + std::exp(-1.0));
    CHECK(q[0] == doctest::Approx(1.0 - sig / 3.0).epsilon(1e-6));
    CHECK(q[1] == doctest::Approx(sig / 3.0).epsilon(1e-6));
    REQUIRE(trace.losses.size() == 2);
    CHECK(trace.losses[0] == doctest::Approx(std::log1p(std::exp(1.0)) / 3.0));
    CHECK(trace.losses[1] < trace.losses[0]);
}

TEST_CASE("learning rate zero leaves the query unchanged") {
    std::mt19937_64 rng(4);
    const auto p = random_matrix(rng, 10, 6);
    const auto q = as_embedding(random_query(rng, 6));
    CHECK(ranknet_feedback(q, p, random_order(rng, 10), 0.0, 20) == q);
    CHECK(kl_feedback(q, p, oracle::uniform_vector(rng, 10, -3, 3), 0.0, 5) == q);
}

TEST_CASE("saturated margins barely move the query") {
    // Scores already follow the teacher with margins of 40.
    const EmbeddingMatrix p({"a", "b", "c"}, 1, {1, 0, -1});
    const EmbeddingVector q({40.0f});
    const auto out = ranknet_feedback(q, p, Ranking({0, 1, 2}), 0.001, 20);
    CHECK(out[0] == doctest::Approx(40.0f));
}

TEST_CASE("KL gradient at a uniform student") {
    const std::vector<double> teacher{10.0, 0.0};
    const std::vector<double> zero{0.0, 0.0};
    const auto obj = kl_objective(zero, kUnit, teacher);
    const double p0 = 1.0 / (1.0 + std::exp(-10.0));
    CHECK(obj.gradient[0] == doctest::Approx(0.5 - p0).epsilon(1e-12));
    CHECK(obj.gradient[1] == doctest::Approx(0.5 - (1.0 - p0)).epsilon(1e-12));
    const double expected = p0 * std::log(p0 / 0.5) + (1 - p0) * std::log((1 - p0) / 0.5);
    CHECK(obj.value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(kl_objective(zero, kUnit, std::vector<double>{3.0, 3.0}).value == doctest::Approx(0.0));
}

TEST_CASE("query-space gradients match central differences") {
    for (int seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t m = 2 + rng() % 15;
        const std::size_t dim = 1 + rng() % 8;
        const auto p = random_matrix(rng, m, dim);
        const auto q = random_query(rng, dim);
        const auto target = RankTarget::from_ranking(random_order(rng, m));
        const auto teacher = oracle::uniform_vector(rng, m, -4, 4);

        const auto rn = ranknet_objective(q, p, target);
        const auto rn_num = oracle::numeric_gradient(
            [&](const std::vector<double>& x) { return ranknet_objective(x, p, target).value; }, q);
        CHECK(oracle::max_relative_error(rn.gradient, rn_num) < 1e-4);

        const auto kl = kl_objective(q, p, teacher);
        const auto kl_num = oracle::numeric_gradient(
            [&](const std::vector<double>& x) { return kl_objective(x, p, teacher).value; }, q);
        CHECK(oracle::max_relative_error(kl.gradient, kl_num) < 1e-4);
    }
}

TEST_CASE("small steps do not increase the objective") {
    for (int seed = 0; seed < 30; ++seed) {
        std::mt19937_64 rng(100 + seed);
        const std::size_t m = 3 + rng() % 20;
        const auto p = random_matrix(rng, m, 8);
        const auto q = as_embedding(random_query(rng, 8));
        Trace rn, kl;
        ranknet_feedback(q, p, random_order(rng, m), 0.001, 20, &rn);
        kl_feedback(q, p, oracle::uniform_vector(rng, m, -4, 4), 0.005, 50, &kl);
        for (const auto* t : {&rn, &kl}) {
            for (std::size_t i = 1; i < t->losses.size(); ++i) CHECK(t->losses[i] <= t->losses[i - 1] + 1e-7);
        }
    }
}

TEST_CASE("RankNet feedback moves the query toward the teacher order") {
    std::mt19937_64 rng(9);
    const auto p = random_matrix(rng, 12, 12);
    const auto q = as_embedding(random_query(rng, 12));
    const auto order = random_order(rng, 12);
    const auto target = RankTarget::from_ranking(order);
    auto loss_at = [&](const EmbeddingVector& v) {
        const auto c = v.components();
        return ranknet_objective(std::vector<double>(c.begin(), c.end()), p, target).value;
    };
    CHECK(loss_at(ranknet_feedback(q, p, order, 0.05, 200)) < loss_at(q));
}

TEST_CASE("combined feedback") {
    std::mt19937_64 rng(12);
    const auto p = random_matrix(rng, 8, 5);
    const auto q = as_embedding(random_query(rng, 5));
    const auto order = random_order(rng, 8);
    const auto ce = oracle::uniform_vector(rng, 8, -3, 3);

    FeedbackConfig cfg;
    cfg.loss_kind = LossKind::combined;
    SUBCASE("sequential is KL then RankNet") {
        const auto after_kl = kl_feedback(q, p, ce, cfg.kl_learning_rate, cfg.kl_steps);
        CHECK(combined_feedback(q, p, ce, order, cfg) ==
              ranknet_feedback(after_kl, p, order, cfg.learning_rate, cfg.steps));
    }
    SUBCASE("summed composition adds the KL term to every step") {
        cfg.composition = Composition::summed;
        const std::vector<double> flat(8, 1.0);
        Trace summed;
        combined_feedback(q, p, flat, order, cfg, &summed);
        Trace rn_only;
        ranknet_feedback(q, p, order, cfg.learning_rate, cfg.steps, &rn_only);
        // A flat teacher adds KL(uniform || student) to every step's value.
        CHECK(summed.losses.front() > rn_only.losses.front());
        CHECK(summed.losses.size() == rn_only.losses.size());
    }
    SUBCASE("run_feedback dispatch") {
        CHECK(run_feedback(q, p, order, ce, cfg) == combined_feedback(q, p, ce, order, cfg));
        CHECK(code_of([&] { run_feedback(q, p, order, std::nullopt, cfg); }) == Errc::config);
        cfg.loss_kind = LossKind::kl;
        CHECK(code_of([&] { run_feedback(q, p, order, std::nullopt, cfg); }) == Errc::config);
        CHECK(run_feedback(q, p, std::nullopt, ce, cfg) == kl_feedback(q, p, ce, cfg.kl_learning_rate, cfg.kl_steps));
        cfg.loss_kind = LossKind::ranknet;
        CHECK(code_of([&] { run_feedback(q, p, std::nullopt, ce, cfg); }) == Errc::config);
    }
}

TEST_CASE("feedback validation") {
    FeedbackConfig cfg;
    cfg.steps = 0;
    CHECK(code_of([&] { cfg.validate(); }) == Errc::config);
    cfg = {};
    cfg.learning_rate = std::nan("");
    CHECK(code_of([&] { cfg.validate(); }) == Errc::config);

    const EmbeddingVector q({1.0f, 0.0f});
    CHECK(code_of([&] { ranknet_feedback(q, kUnit, Ranking({0, 1, 2}), 0.1, 1); }) == Errc::length_mismatch);
    CHECK(code_of([&] { kl_feedback(q, kUnit, std::vector<double>{1.0}, 0.1, 1); }) == Errc::length_mismatch);
    CHECK(code_of([&] { ranknet_feedback(EmbeddingVector({1.0f}), kUnit, Ranking({0, 1}), 0.1, 1); }) ==
          Errc::dimension_mismatch);
    CHECK(code_of([&] { ranknet_feedback(q, kUnit, Ranking({0, 1}), 1e300, 5); }) == Errc::non_finite);
}

TEST_CASE("second-stage retrieval") {
    EmbeddingMatrix corpus({"c", "a", "b", "d"}, 1, {1, 2, 2, -1});
    const EmbeddingVector q({1.0f});
    const auto top = second_stage_retrieve("q", q, corpus, 3);
    REQUIRE(top.size() == 3);
    CHECK(top.entries()[0].passage_id == "a");
    CHECK(top.entries()[1].passage_id == "b");
    CHECK(top.entries()[2].passage_id == "c");
    CHECK(second_stage_retrieve("q", q, corpus, 10).size() == 4);
    CHECK(code_of([&] { second_stage_retrieve("q", q, corpus, 0); }) == Errc::precondition);
}

TEST_CASE("second-stage retrieval agrees with a full sort") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto corpus = random_matrix(rng, 200, 8);
        const auto q = as_embedding(random_query(rng, 8));
        const auto scores = student_scores(q, corpus);
        std::vector<std::size_t> rows(200);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        std::sort(rows.begin(), rows.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
        const auto top = second_stage_retrieve("q", q, corpus, 25);
        for (std::size_t i = 0; i < 25; ++i) CHECK(top.entries()[i].passage_id == corpus.ids()[rows[i]]);
    }
}
