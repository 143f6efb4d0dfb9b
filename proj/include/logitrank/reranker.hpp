#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "logitrank/backend.hpp"
#include "logitrank/core.hpp"

namespace logitrank {

/// Window start offsets, processed in listed order (back to front).
struct WindowSchedule {
    std::vector<std::size_t> starts;
    std::size_t window_size = 0;
    std::size_t step = 0;
};

/// starts = n-m, n-m-s, ... clamped at 0 and ending at 0; [0] when n <= m.
WindowSchedule build_schedule(std::size_t n, std::size_t window_size, std::size_t step);

struct RerankConfig {
    std::size_t window_size = 20;
    std::size_t step = 10;
    /// first_token ranks from logits; sequence parses the generated
    /// identifiers; both requests both and applies the logit ranking.
    DecodeMode mode = DecodeMode::first_token;
    /// Only the leading `top_k` candidates are reranked; the rest follow in
    /// retrieval order. 0 means all.
    std::size_t top_k = 100;

    void validate() const;
};

/// Slots by descending logit; equal logits keep ascending slot order.
Ranking rank_from_logits(const LogitVector& logits);

/// Emission order of valid, in-range identifiers with duplicates dropped,
/// followed by any slots never mentioned in ascending order. Total: always
/// returns a permutation of 0..m-1.
Ranking rank_from_sequence(std::span<const IdentifierToken> tokens, std::size_t m);

struct WindowEvent {
    std::size_t start = 0;
    std::size_t size = 0;
    std::span<const Passage> passages;
    const WindowResponse& response;
    const Ranking& applied;
};

struct RerankOutcome {
    CandidateList ranked;
    std::size_t windows = 0;
    std::size_t backend_calls = 0;
    std::chrono::nanoseconds backend_time{0};
    std::size_t decode_tokens = 0;
};

using WindowObserver = std::function<void(const WindowEvent&)>;

/// Sliding-window rerank of one query's candidates. Each window's ranking is
/// written back before the window moves, so promoted passages carry forward.
/// Output scores are n - position. Backend errors are rethrown with the
/// window start attached.
RerankOutcome rerank(const Query& query, const CandidateList& candidates, const RerankConfig& config,
                     Backend& backend, const Corpus& corpus, const WindowObserver& observer = {});

struct RerankJob {
    const Query* query = nullptr;
    const CandidateList* candidates = nullptr;
};

/// Reranks independent queries on up to `workers` threads. Results are in job
/// order. Backends that are not concurrent-safe are called under a lock.
std::vector<RerankOutcome> rerank_all(std::span<const RerankJob> jobs, const RerankConfig& config,
                                      Backend& backend, const Corpus& corpus, std::size_t workers = 1);

}  // namespace logitrank
