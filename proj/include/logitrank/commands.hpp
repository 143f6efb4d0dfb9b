#pragma once

// Subcommand implementations behind the `logitrank` executable. Each one
// throws logitrank::Error on failure and writes outputs atomically, so a
// failed command leaves no partial file behind.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "logitrank/config.hpp"

namespace logitrank::cli {

namespace fs = std::filesystem;

std::unique_ptr<Backend> make_backend(const AppConfig& config);

struct RerankArgs {
    fs::path queries;
    fs::path corpus;
    fs::path run;
    fs::path out;
};

/// Reranks every query in the input run. Logs windows and backend calls per
/// query to `log`.
void cmd_rerank(const RerankArgs& args, const AppConfig& config, std::ostream& log);

struct EvalArgs {
    fs::path run;
    fs::path qrels;
    /// "ndcg" and/or "recall".
    std::vector<std::string> metrics{"ndcg", "recall"};
    std::vector<std::size_t> ks{10, 100};
    /// Per-query and mean values at full precision, tab separated.
    std::optional<fs::path> out;
};

/// Prints mean metrics in percent to one decimal place.
void cmd_eval(const EvalArgs& args, std::ostream& display);

struct FeedbackArgs {
    fs::path query_embeddings;
    fs::path corpus_embeddings;
    /// Reranker teacher: a run whose rank order is the supervision.
    std::optional<fs::path> teacher_run;
    /// Cross-encoder teacher: a run whose scores are the supervision.
    std::optional<fs::path> teacher_scores;
    fs::path out_embeddings;
    fs::path out_run;
};

/// First-stage retrieval of `feedback_depth` passages per query, query
/// update against the teacher(s), then second-stage retrieval of
/// `retrieve_k`. Retrieved passages missing from the teacher run are ranked
/// after the ones it lists, in retrieval order; a retrieved passage without
/// a teacher score is an input error.
void cmd_feedback(const FeedbackArgs& args, const AppConfig& config, std::ostream& log);

/// Text inputs shared by bench and agreement. When all three paths are
/// empty, the seeded synthetic text fixture is used instead.
struct DatasetArgs {
    fs::path queries;
    fs::path corpus;
    fs::path run;
    fs::path qrels;
};

struct BenchArgs {
    DatasetArgs data;
    /// "window" (per-window latency by m) or "accuracy" (nDCG@10 vs k).
    std::string kind = "window";
    std::vector<std::size_t> window_sizes{5, 10, 15, 20};
    std::vector<std::size_t> ks{20, 40, 60, 80, 100};
    std::vector<DecodeMode> modes{DecodeMode::first_token, DecodeMode::sequence};
    std::size_t repeats = 5;
    /// Report simulated token cost using config.cost_model.
    bool simulate = true;
    fs::path out;
};

void cmd_bench(const BenchArgs& args, const AppConfig& config, std::ostream& log);

struct AgreementArgs {
    DatasetArgs data;
    fs::path out;
};

/// Reranks in `both` mode and tallies, per position, how often the
/// generated sequence and the logit ranking put the same slot there. Writes
/// a TSV and `<out>.meta.json` describing the aggregation.
void cmd_agreement(const AgreementArgs& args, const AppConfig& config, std::ostream& log);

struct MakeFixtureArgs {
    fs::path dir;
    /// "text", "embedding" or "all".
    std::string kind = "all";
};

void cmd_make_fixture(const MakeFixtureArgs& args, const AppConfig& config, std::ostream& log);

}  // namespace logitrank::cli
