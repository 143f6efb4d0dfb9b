#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "logitrank/backend.hpp"
#include "logitrank/core.hpp"
#include "logitrank/reranker.hpp"

namespace logitrank::eval {

/// Graded judgments; absent pairs are grade 0.
class Qrels {
public:
    void set(const std::string& query_id, const std::string& passage_id, int grade);
    int grade(const std::string& query_id, const std::string& passage_id) const;
    /// Judgments for one query, or nullptr.
    const std::unordered_map<std::string, int>* judged(const std::string& query_id) const;
    bool has_query(const std::string& query_id) const { return judgments_.count(query_id) != 0; }
    std::vector<std::string> query_ids() const;
    std::size_t size() const;

private:
    std::unordered_map<std::string, std::unordered_map<std::string, int>> judgments_;
};

struct RunRecord {
    std::string query_id;
    std::string passage_id;
    std::size_t rank = 0;
    double score = 0.0;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Records for one candidate list, rank 1 first.
std::vector<RunRecord> to_run(const CandidateList& list);

/// Exponential-gain nDCG@k. `run` must be in strictly ascending rank order.
/// IDCG is taken over the ideal ordering of all judged passages for the
/// query; 0 when none are relevant.
double ndcg_at_k(const std::string& query_id, std::span<const RunRecord> run, const Qrels& qrels, std::size_t k);

/// |relevant in top-k| / |relevant|; 0 when nothing is relevant.
double recall_at_k(const std::string& query_id, std::span<const RunRecord> run, const Qrels& qrels, std::size_t k);

/// True when both rankings put the same slot at `position`.
bool rank_agreement(const Ranking& logit_ranking, const Ranking& sequence_ranking, std::size_t position);

/// Per-position agreement counts across many windows. Positions beyond a
/// window's size are not counted for that window.
class AgreementTally {
public:
    void add(const Ranking& logit_ranking, const Ranking& sequence_ranking);
    std::size_t positions() const noexcept { return totals_.size(); }
    std::size_t agreed(std::size_t position) const { return agreed_.at(position); }
    std::size_t total(std::size_t position) const { return totals_.at(position); }
    /// Percentage in [0, 100]; 0 for positions never observed.
    double percent(std::size_t position) const;
    std::size_t windows() const noexcept { return windows_; }

private:
    std::vector<std::size_t> agreed_;
    std::vector<std::size_t> totals_;
    std::size_t windows_ = 0;
};

struct LatencyCell {
    std::size_t window_size = 0;
    DecodeMode mode = DecodeMode::first_token;
    bool valid = true;
    std::string error;
    std::size_t repeats = 0;
    double median_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    std::size_t prompt_tokens = 0;
    std::size_t decode_tokens = 0;
    std::optional<double> simulated_cost;
};

struct BenchReport {
    std::vector<LatencyCell> cells;
    std::optional<TokenCostModel> cost_model;
};

/// Simulated cost of one window: prefill over the prompt plus one decode
/// step per generated token after the first, which the prefill pass itself
/// emits.
double window_cost(const TokenCostModel& model, std::size_t prompt_tokens, std::size_t decode_tokens);

/// Times single-window backend calls for each window size in `window_sizes`
/// and each mode. Windows take the first m passages of `pool`. Only the
/// backend call is timed. With a cost model, each cell also carries the
/// simulated cost computed from whitespace prompt tokens.
BenchReport bench_window_latency(Backend& backend, const Query& query, std::span<const Passage> pool,
                                 std::span<const std::size_t> window_sizes, std::span<const DecodeMode> modes,
                                 std::size_t repeats, const PromptTemplate& prompt,
                                 const std::optional<TokenCostModel>& cost_model = std::nullopt);

struct AccuracyLatencyRow {
    std::size_t k = 0;
    DecodeMode mode = DecodeMode::first_token;
    std::size_t queries = 0;
    double mean_latency_ms = 0.0;
    double mean_windows = 0.0;
    double mean_ndcg10 = 0.0;
    std::optional<double> mean_simulated_cost;
};

struct AccuracyLatencyInput {
    const std::vector<Query>* queries = nullptr;
    /// Candidate list per query id.
    const std::unordered_map<std::string, CandidateList>* candidates = nullptr;
    const Corpus* corpus = nullptr;
    const Qrels* qrels = nullptr;
};

/// Reranks the top-k of every query for each k and records the mean
/// per-query backend latency and nDCG@10.
std::vector<AccuracyLatencyRow> bench_accuracy_vs_latency(Backend& backend, const AccuracyLatencyInput& input,
                                                          std::span<const std::size_t> ks, DecodeMode mode,
                                                          RerankConfig config, const PromptTemplate& prompt,
                                                          const std::optional<TokenCostModel>& cost_model =
                                                              std::nullopt);

}  // namespace logitrank::eval
