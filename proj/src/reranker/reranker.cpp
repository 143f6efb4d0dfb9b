#include "logitrank/reranker.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace logitrank {

WindowSchedule build_schedule(std::size_t n, std::size_t window_size, std::size_t step) {
    if (n < 1) throw Error(Errc::config, "candidate count must be >= 1");
    if (step < 1 || step > window_size || window_size > kMaxWindow) {
        throw Error(Errc::config, "need 1 <= step <= window_size <= 26 (got step " + std::to_string(step) +
                                      ", window " + std::to_string(window_size) + ")");
    }
    WindowSchedule schedule{{}, window_size, step};
    if (n <= window_size) {
        schedule.starts.push_back(0);
        return schedule;
    }
    for (std::size_t start = n - window_size; start > 0;) {
        schedule.starts.push_back(start);
        start = start > step ? start - step : 0;
    }
    schedule.starts.push_back(0);
    return schedule;
}

void RerankConfig::validate() const {
    if (step < 1 || step > window_size || window_size > kMaxWindow) {
        throw Error(Errc::config, "need 1 <= step <= window_size <= 26");
    }
}

Ranking rank_from_logits(const LogitVector& logits) {
    std::vector<std::size_t> order(logits.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
    return Ranking(std::move(order));
}

Ranking rank_from_sequence(std::span<const IdentifierToken> tokens, std::size_t m) {
    if (m < 1) throw Error(Errc::precondition, "window must have at least one slot");
    std::vector<bool> placed(m, false);
    std::vector<std::size_t> order;
    order.reserve(m);
    for (auto token : tokens) {
        const auto slot = token.index();
        if (slot >= m || placed[slot]) continue;
        placed[slot] = true;
        order.push_back(slot);
    }
    for (std::size_t slot = 0; slot < m; ++slot) {
        if (!placed[slot]) order.push_back(slot);
    }
    return Ranking(std::move(order));
}

namespace {

Ranking ranking_for(const WindowResponse& response, DecodeMode mode, std::size_t m) {
    if (mode == DecodeMode::sequence) {
        if (!response.generated_sequence) {
            throw Error(Errc::malformed_response, "backend returned no sequence in sequence mode");
        }
        return rank_from_sequence(*response.generated_sequence, m);
    }
    if (!response.first_token_logits) {
        throw Error(Errc::missing_logit, "backend returned no first-token logits");
    }
    if (response.first_token_logits->size() != m) {
        throw Error(Errc::missing_logit, "backend returned " + std::to_string(response.first_token_logits->size()) +
                                             " logits for a window of " + std::to_string(m));
    }
    return rank_from_logits(*response.first_token_logits);
}

}  // namespace

RerankOutcome rerank(const Query& query, const CandidateList& candidates, const RerankConfig& config,
                     Backend& backend, const Corpus& corpus, const WindowObserver& observer) {
    config.validate();
    if (candidates.empty()) throw Error(Errc::precondition, "no candidates for query " + query.id);

    std::vector<Candidate> entries = candidates.entries();
    const std::size_t n = entries.size();
    const std::size_t depth = config.top_k == 0 ? n : std::min(config.top_k, n);
    const auto schedule = build_schedule(depth, config.window_size, config.step);

    RerankOutcome outcome;
    std::vector<Passage> window;
    for (const auto start : schedule.starts) {
        const auto size = std::min(config.window_size, depth - start);
        window.clear();
        for (std::size_t i = start; i < start + size; ++i) {
            auto it = corpus.find(entries[i].passage_id);
            if (it == corpus.end()) {
                throw Error(Errc::input, "passage " + entries[i].passage_id + " not in corpus");
            }
            window.push_back(it->second);
        }

        WindowResponse response;
        Ranking applied = Ranking::identity(size);
        try {
            response = backend.rank_window(query, window, config.mode);
            applied = ranking_for(response, config.mode, size);
        } catch (const Error& e) {
            throw Error(e.code(), "query " + query.id + ", window start " + std::to_string(start) + ": " + e.detail());
        }
        ++outcome.backend_calls;
        ++outcome.windows;
        outcome.backend_time += response.wall_time;
        outcome.decode_tokens += response.decode_token_count;

        std::vector<Candidate> reordered;
        reordered.reserve(size);
        for (auto slot : applied.order()) reordered.push_back(entries[start + slot]);
        std::move(reordered.begin(), reordered.end(), entries.begin() + static_cast<std::ptrdiff_t>(start));

        if (observer) observer(WindowEvent{start, size, window, response, applied});
    }

    for (std::size_t pos = 0; pos < n; ++pos) entries[pos].retrieval_score = static_cast<double>(n - pos);
    outcome.ranked = CandidateList::from_ordered(candidates.query_id(), std::move(entries));
    return outcome;
}

namespace {

class SerializedBackend final : public Backend {
public:
    explicit SerializedBackend(Backend& inner) : inner_(inner) {}

    WindowResponse rank_window(const Query& query, std::span<const Passage> passages, DecodeMode mode) override {
        std::lock_guard lock(mutex_);
        return inner_.rank_window(query, passages, mode);
    }
    std::string name() const override { return inner_.name(); }

private:
    Backend& inner_;
    std::mutex mutex_;
};

}  // namespace

std::vector<RerankOutcome> rerank_all(std::span<const RerankJob> jobs, const RerankConfig& config,
                                      Backend& backend, const Corpus& corpus, std::size_t workers) {
    std::vector<RerankOutcome> results(jobs.size());
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(jobs.size(), 1));

    if (workers == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            results[i] = rerank(*jobs[i].query, *jobs[i].candidates, config, backend, corpus);
        }
        return results;
    }

    SerializedBackend serialized(backend);
    Backend& shared = backend.concurrent_safe() ? backend : static_cast<Backend&>(serialized);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&] {
        for (std::size_t i = next++; i < jobs.size() && !failed; i = next++) {
            try {
                results[i] = rerank(*jobs[i].query, *jobs[i].candidates, config, shared, corpus);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    pool.clear();

    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace logitrank
