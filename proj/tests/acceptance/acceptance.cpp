// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "../support/oracles.hpp"
#include "logitrank/eval.hpp"
#include "logitrank/feedback.hpp"
#include "logitrank/fixture.hpp"
#include "logitrank/ltr.hpp"
#include "logitrank/reranker.hpp"

using namespace logitrank;

namespace {

struct Result {
    bool pass = true;
    std::string detail;
};

class Criteria {
public:
    void run(int number, const char* title, double budget_s, const std::function<Result()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        Result r;
        try {
            r = body();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string detail = r.detail;
        if (budget_s > 0 && secs >= budget_s) {
            r.pass = false;
            detail += " [over the " + std::to_string(static_cast<int>(budget_s)) + " s budget]";
        }
        std::printf("%s %d %-32s %8.3f s  %s\n", r.pass ? "PASS" : "FAIL", number, title, secs, detail.c_str());
        std::fflush(stdout);
        failures_ += r.pass ? 0 : 1;
    }
    int failures() const { return failures_; }

private:
    int failures_ = 0;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

// 1 ---------------------------------------------------------------------

Result schedule_criterion() {
    const auto s = build_schedule(100, 20, 10);
    if (s.starts != std::vector<std::size_t>{80, 70, 60, 50, 40, 30, 20, 10, 0}) {
        return {false, "build_schedule(100, 20, 10) differs from [80..0]"};
    }
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 500;
        const std::size_t m = 1 + rng() % kMaxWindow;
        const std::size_t step = 1 + rng() % m;
        const auto sched = build_schedule(n, m, step);
        std::vector<bool> covered(n, false);
        for (const auto start : sched.starts) {
            for (std::size_t i = start; i < std::min(n, start + m); ++i) covered[i] = true;
        }
        if (sched.starts.empty() || sched.starts.back() != 0) {
            return {false, "last start not 0 for n=" + std::to_string(n)};
        }
        if (std::find(covered.begin(), covered.end(), false) != covered.end()) {
            return {false, "uncovered index for n=" + std::to_string(n) + " m=" + std::to_string(m)};
        }
    }
    return {true, "1000 random schedules cover every index and end at 0"};
}

// 2 ---------------------------------------------------------------------

Result gradient_criterion() {
    using Loss = std::function<ltr::LossValue(const std::vector<double>&, const RankTarget&)>;
    const std::vector<std::pair<const char*, Loss>> losses{
        {"ranknet", [](const auto& s, const auto& t) { return ltr::weighted_ranknet(s, t); }},
        {"lambdarank", [](const auto& s, const auto& t) { return ltr::lambdarank(s, t); }},
        {"listnet", [](const auto& s, const auto& t) { return ltr::listnet(s, t); }},
    };
    std::ostringstream detail;
    bool pass = true;
    for (const auto& [name, loss] : losses) {
        double worst = 0.0;
        for (int seed = 0; seed < 100; ++seed) {
            std::mt19937_64 rng(seed);
            const std::size_t m = 1 + rng() % 20;
            const auto s = oracle::separated_scores(rng, m, -5, 5, 1e-3);
            const RankTarget t(oracle::random_ranks(rng, m));
            const auto numeric =
                oracle::numeric_gradient([&](const std::vector<double>& x) { return loss(x, t).value; }, s);
            worst = std::max(worst, oracle::max_relative_error(*loss(s, t).gradient, numeric));
        }
        pass = pass && worst < 1e-4;
        detail << name << " " << fmt("%.1e", worst) << "  ";
    }

    double worst = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t m = 1 + rng() % 20;
        const std::size_t dim = 1 + rng() % 16;
        std::normal_distribution<float> g;
        std::vector<std::string> ids;
        std::vector<float> data;
        for (std::size_t r = 0; r < m; ++r) {
            ids.push_back("p" + std::to_string(r));
            for (std::size_t d = 0; d < dim; ++d) data.push_back(g(rng));
        }
        const EmbeddingMatrix p(ids, dim, data);
        const auto q = oracle::uniform_vector(rng, dim, -1, 1);
        const auto teacher = oracle::uniform_vector(rng, m, -5, 5);
        const auto numeric = oracle::numeric_gradient(
            [&](const std::vector<double>& x) { return feedback::kl_objective(x, p, teacher).value; }, q);
        worst = std::max(worst, oracle::max_relative_error(feedback::kl_objective(q, p, teacher).gradient, numeric));
    }
    pass = pass && worst < 1e-4;
    detail << "kl " << fmt("%.1e", worst);
    return {pass, detail.str()};
}

// 3 ---------------------------------------------------------------------

Result fixed_point_criterion() {
    const double ln2 = std::log(2.0);
    const double a = ltr::weighted_ranknet(std::vector<double>{0, 0}, RankTarget({1, 2})).value;
    const double b = ltr::weighted_ranknet(std::vector<double>{0, 0, 0}, RankTarget({1, 2, 3})).value;
    const double c = ltr::listnet(std::vector<double>{0, 0}, RankTarget({1, 2})).value;
    const double ea = std::abs(a - ln2 / 3.0);
    const double eb = std::abs(b - ln2 * (1.0 / 3 + 1.0 / 4 + 1.0 / 5));
    const double ec = std::abs(c - ln2);
    return {ea <= 1e-9 && eb <= 1e-9 && ec <= 1e-9,
            "errors " + fmt("%.1e", ea) + " " + fmt("%.1e", eb) + " " + fmt("%.1e", ec)};
}

// 4 ---------------------------------------------------------------------

/// Returns arbitrary identifier sequences: random, duplicated, truncated,
/// out of range, or empty. First-token logits are random.
class FuzzBackend final : public Backend {
public:
    explicit FuzzBackend(std::uint64_t seed) : rng_(seed) {}

    WindowResponse rank_window(const Query&, std::span<const Passage> passages, DecodeMode mode) override {
        const auto m = passages.size();
        ++calls;
        WindowResponse r;
        if (mode != DecodeMode::sequence) {
            std::uniform_real_distribution<double> u(-10, 10);
            std::vector<double> v(m);
            for (auto& x : v) x = rng_() % 4 == 0 ? 0.0 : u(rng_);
            r.first_token_logits = LogitVector(std::move(v));
        }
        if (mode != DecodeMode::first_token) {
            std::vector<IdentifierToken> seq;
            switch (rng_() % 5) {
                case 0:  // any letter, any length
                    for (std::size_t i = 0, n = rng_() % 40; i < n; ++i) seq.push_back(identifier_for(rng_() % kMaxWindow));
                    break;
                case 1: {  // a permutation with duplicates spliced in
                    for (std::size_t i = 0; i < m; ++i) seq.push_back(identifier_for(i));
                    std::shuffle(seq.begin(), seq.end(), rng_);
                    for (std::size_t i = 0, n = 1 + rng_() % 5; i < n; ++i) seq.insert(seq.begin() + rng_() % seq.size(), seq[rng_() % seq.size()]);
                    break;
                }
                case 2: {  // a truncated permutation
                    for (std::size_t i = 0; i < m; ++i) seq.push_back(identifier_for(i));
                    std::shuffle(seq.begin(), seq.end(), rng_);
                    seq.erase(seq.begin() + static_cast<std::ptrdiff_t>(rng_() % (m + 1)), seq.end());
                    break;
                }
                case 3:  // nothing
                    break;
                default:  // one repeated letter
                    seq.assign(1 + rng_() % 30, identifier_for(rng_() % kMaxWindow));
            }
            r.decode_token_count = seq.size();
            r.generated_sequence = std::move(seq);
        } else {
            r.decode_token_count = 1;
        }
        return r;
    }
    std::string name() const override { return "fuzz"; }

    std::size_t calls = 0;

private:
    std::mt19937_64 rng_;
};

Result permutation_criterion() {
    FuzzBackend backend(4);
    std::mt19937_64 rng(44);
    std::size_t lists = 0;
    while (backend.calls < 10000) {
        const std::size_t n = 1 + rng() % 120;
        Corpus corpus;
        std::vector<Candidate> entries;
        for (std::size_t i = 0; i < n; ++i) {
            const auto id = "p" + std::to_string(i);
            corpus.emplace(id, Passage{id, "text", {}});
            entries.push_back({id, static_cast<double>(rng() % 50)});
        }
        const auto input = CandidateList::ingest("q", entries);
        RerankConfig cfg;
        cfg.window_size = 1 + rng() % kMaxWindow;
        cfg.step = 1 + rng() % cfg.window_size;
        cfg.top_k = rng() % 3 == 0 ? rng() % (n + 1) : 0;
        cfg.mode = rng() % 2 ? DecodeMode::sequence : DecodeMode::both;
        const auto out = rerank({"q", "query", {}}, input, cfg, backend, corpus);
        std::multiset<std::string> a, b;
        for (const auto& e : input.entries()) a.insert(e.passage_id);
        for (const auto& e : out.ranked.entries()) b.insert(e.passage_id);
        if (a != b || out.ranked.size() != n) {
            return {false, "output is not a permutation of the input (list " + std::to_string(lists) + ")"};
        }
        ++lists;
    }
    return {true, std::to_string(backend.calls) + " fuzzed windows over " + std::to_string(lists) +
                      " lists, every output a permutation"};
}

// 5 ---------------------------------------------------------------------

Result consistency_criterion() {
    const auto fx = fixture::make_text_fixture(42);
    MockBackend backend;
    RerankConfig first, seq, both;
    first.mode = DecodeMode::first_token;
    seq.mode = DecodeMode::sequence;
    both.mode = DecodeMode::both;
    eval::AgreementTally tally;
    const WindowObserver observe = [&](const WindowEvent& ev) {
        tally.add(rank_from_logits(*ev.response.first_token_logits),
                  rank_from_sequence(*ev.response.generated_sequence, ev.size));
    };
    Corpus corpus;
    for (const auto& p : fx.passages) corpus.emplace(p.id, p);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < fx.queries.size(); ++i) {
        const auto a = rerank(fx.queries[i], fx.candidates[i], first, backend, corpus);
        const auto b = rerank(fx.queries[i], fx.candidates[i], seq, backend, corpus);
        rerank(fx.queries[i], fx.candidates[i], both, backend, corpus, observe);
        mismatches += a.ranked == b.ranked ? 0 : 1;
    }
    double lowest = 100.0;
    for (std::size_t p = 0; p < tally.positions(); ++p) lowest = std::min(lowest, tally.percent(p));
    const bool pass = fx.queries.size() == 200 && mismatches == 0 && tally.positions() == 20 && lowest == 100.0;
    return {pass, std::to_string(fx.queries.size()) + " queries, " + std::to_string(mismatches) +
                      " ranking mismatches, agreement min " + fmt("%.1f", lowest) + "% over " +
                      std::to_string(tally.windows()) + " windows"};
}

// 6 ---------------------------------------------------------------------

Result cost_criterion() {
    const auto fx = fixture::make_text_fixture(42, {.queries = 1});
    MockBackend backend;
    const auto tmpl = PromptTemplate::listwise_default();
    const auto& query = fx.queries[0];
    Corpus corpus;
    for (const auto& p : fx.passages) corpus.emplace(p.id, p);
    std::vector<Passage> pool;
    for (const auto& c : fx.candidates[0].entries()) pool.push_back(corpus.at(c.passage_id));

    const std::vector<std::size_t> sizes{5, 10, 15, 20};
    const std::vector<DecodeMode> modes{DecodeMode::first_token, DecodeMode::sequence};
    const TokenCostModel default_model{0.01, 1.0};
    const auto report = eval::bench_window_latency(backend, query, pool, sizes, modes, 3, tmpl, default_model);
    bool counts_ok = true;
    bool monotone = true;
    double previous_gap = -1.0;
    std::ostringstream gaps;
    for (std::size_t i = 0; i + 1 < report.cells.size(); i += 2) {
        const auto& f = report.cells[i];
        const auto& s = report.cells[i + 1];
        counts_ok = counts_ok && f.valid && s.valid && f.decode_tokens == 1 && s.decode_tokens == f.window_size;
        const double gap = *s.simulated_cost - *f.simulated_cost;
        monotone = monotone && gap > previous_gap;
        previous_gap = gap;
        gaps << (i ? "," : "") << fmt("%.0f", gap);
    }

    // Calibrate so a 20-slot window's prefill costs 19 decode steps.
    const double d = 1.0;
    const std::vector<std::size_t> twenty{20};
    const auto prompt20 = whitespace_token_count(tmpl.render(query, std::span(pool).first(20)));
    const TokenCostModel calibrated{19.0 * d / static_cast<double>(prompt20), d};
    const auto cell = eval::bench_window_latency(backend, query, pool, twenty, modes, 1, tmpl, calibrated).cells;
    const double window_ratio = *cell[1].simulated_cost / *cell[0].simulated_cost;

    // Whole query: every window of the 100-candidate rerank has 20 slots and
    // equal-length passages, so the same calibration holds per window.
    double total[2] = {0.0, 0.0};
    for (int k = 0; k < 2; ++k) {
        RerankConfig cfg;
        cfg.mode = modes[k];
        rerank(query, fx.candidates[0], cfg, backend, corpus, [&](const WindowEvent& ev) {
            total[k] += eval::window_cost(calibrated, whitespace_token_count(tmpl.render(query, ev.passages)),
                                          ev.response.decode_token_count);
        });
    }
    const double total_ratio = total[1] / total[0];

    const bool pass = counts_ok && monotone && std::abs(window_ratio - 2.0) <= 1e-9 &&
                      std::abs(total_ratio - 2.0) <= 1e-9;
    return {pass, std::string("decode 1 vs m ") + (counts_ok ? "ok" : "WRONG") + ", window ratio " +
                      fmt("%.12f", window_ratio) + ", query ratio " + fmt("%.12f", total_ratio) +
                      ", gap by m " + gaps.str() + (monotone ? " increasing" : " NOT increasing")};
}

// 7 ---------------------------------------------------------------------

Result metric_criterion() {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 150;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back("d" + std::to_string(i));
        std::shuffle(ids.begin(), ids.end(), rng);
        eval::Qrels qrels;
        std::map<std::string, int> grades;
        for (std::size_t i = 0; i < n + 20; ++i) {
            if (rng() % 4 != 0) continue;
            const int g = static_cast<int>(rng() % 4);
            qrels.set("q", "d" + std::to_string(i), g);
            grades["d" + std::to_string(i)] = g;
        }
        std::vector<eval::RunRecord> run;
        for (std::size_t i = 0; i < n; ++i) run.push_back({"q", ids[i], i + 1, static_cast<double>(n - i)});
        worst = std::max(worst, std::abs(eval::ndcg_at_k("q", run, qrels, 10) - oracle::ndcg(ids, grades, 10)));
        worst = std::max(worst, std::abs(eval::recall_at_k("q", run, qrels, 100) - oracle::recall(ids, grades, 100)));
    }
    eval::Qrels single;
    single.set("q", "rel", 1);
    const std::vector<eval::RunRecord> run{{"q", "x", 1, 2.0}, {"q", "rel", 2, 1.0}};
    const double example = eval::ndcg_at_k("q", run, single, 10);
    const double expected = std::log2(2.0) / std::log2(3.0);
    const bool pass = worst <= 1e-9 && std::abs(example - expected) <= 1e-9;
    return {pass, "max deviation " + fmt("%.1e", worst) + ", rank-2 case " + fmt("%.4f", example)};
}

// 8 ---------------------------------------------------------------------

Result feedback_criterion() {
    const auto fx = fixture::make_embedding_fixture(42);
    const feedback::FeedbackConfig cfg;  // lr 0.001, 20 steps
    enum { none, ce, llm, combined, kinds };
    double recall[kinds] = {};
    std::size_t planted_in_top10 = 0;
    for (const auto& c : fx.cases) {
        const auto passages = fx.corpus.select(c.retrieved);
        const auto teacher = fixture::ideal_order(c.query_id, c.retrieved, fx.qrels);
        const EmbeddingVector q[kinds] = {
            c.query,
            feedback::kl_feedback(c.query, passages, c.teacher_ce, cfg.kl_learning_rate, cfg.kl_steps),
            feedback::ranknet_feedback(c.query, passages, teacher, cfg.learning_rate, cfg.steps),
            feedback::combined_feedback(c.query, passages, c.teacher_ce, teacher, cfg),
        };
        for (int k = 0; k < kinds; ++k) {
            const auto run = eval::to_run(feedback::second_stage_retrieve(c.query_id, q[k], fx.corpus, 10));
            recall[k] += eval::recall_at_k(c.query_id, run, fx.qrels, 10);
            if (k == none) {
                for (const auto& r : run) planted_in_top10 += fx.qrels.grade(c.query_id, r.passage_id) > 0;
            }
        }
    }
    for (auto& r : recall) r /= static_cast<double>(fx.cases.size());
    const bool pass = planted_in_top10 == 0 && recall[llm] > recall[none] && recall[combined] >= recall[llm] &&
                      recall[combined] >= recall[ce];
    return {pass, "recall@10 none " + fmt("%.4f", recall[none]) + ", CE " + fmt("%.4f", recall[ce]) + ", RankNet " +
                      fmt("%.4f", recall[llm]) + ", CE+RankNet " + fmt("%.4f", recall[combined])};
}

// 9 ---------------------------------------------------------------------

Result descent_criterion() {
    std::size_t recovered = 0, total = 0;
    for (std::size_t m = 1; m <= 10; ++m) {
        for (int seed = 0; seed < 50; ++seed) {
            std::mt19937_64 rng(1000 * m + seed);
            auto s = oracle::uniform_vector(rng, m, -5, 5);
            const auto ranks = oracle::random_ranks(rng, m);
            const RankTarget t(ranks);
            for (int step = 0; step < 200; ++step) {
                const auto g = *ltr::weighted_ranknet(s, t).gradient;
                for (std::size_t i = 0; i < m; ++i) s[i] -= 1.0 * g[i];
            }
            std::vector<std::size_t> expected(m);
            for (std::size_t i = 0; i < m; ++i) expected[ranks[i] - 1] = i;
            recovered += rank_from_logits(LogitVector(s)) == Ranking(expected) ? 1 : 0;
            ++total;
        }
    }
    return {recovered == total, std::to_string(recovered) + "/" + std::to_string(total) + " targets recovered"};
}

}  // namespace

int main() {
    Criteria c;
    c.run(1, "window schedule", 1.0, schedule_criterion);
    c.run(2, "gradient suite", 10.0, gradient_criterion);
    c.run(3, "loss fixed points", 0.0, fixed_point_criterion);
    c.run(4, "permutation safety", 0.0, permutation_criterion);
    c.run(5, "mock end-to-end consistency", 0.0, consistency_criterion);
    c.run(6, "simulated latency", 0.0, cost_criterion);
    c.run(7, "metric oracle equivalence", 0.0, metric_criterion);
    c.run(8, "relevance feedback efficacy", 30.0, feedback_criterion);
    c.run(9, "loss descent", 0.0, descent_criterion);
    std::printf("%d of 9 criteria failed\n", c.failures());
    return c.failures() == 0 ? 0 : 1;
}
