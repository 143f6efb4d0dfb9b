#include <algorithm>
#include <chrono>

#include "logitrank/eval.hpp"

namespace logitrank::eval {

double window_cost(const TokenCostModel& model, std::size_t prompt_tokens, std::size_t decode_tokens) {
    return simulated_cost(model, prompt_tokens, decode_tokens > 0 ? decode_tokens - 1 : 0);
}

namespace {

double to_ms(std::chrono::nanoseconds ns) { return std::chrono::duration<double, std::milli>(ns).count(); }

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const auto n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

BenchReport bench_window_latency(Backend& backend, const Query& query, std::span<const Passage> pool,
                                 std::span<const std::size_t> window_sizes, std::span<const DecodeMode> modes,
                                 std::size_t repeats, const PromptTemplate& prompt,
                                 const std::optional<TokenCostModel>& cost_model) {
    if (repeats < 1) throw Error(Errc::config, "bench needs at least one repeat");
    if (cost_model) cost_model->validate();

    BenchReport report;
    report.cost_model = cost_model;
    for (const auto m : window_sizes) {
        for (const auto mode : modes) {
            LatencyCell cell;
            cell.window_size = m;
            cell.mode = mode;
            try {
                check_window_size(m);
                if (m > pool.size()) {
                    throw Error(Errc::precondition, "pool has " + std::to_string(pool.size()) + " passages");
                }
                const auto window = pool.first(m);
                cell.prompt_tokens = whitespace_token_count(prompt.render(query, window));
                std::vector<double> samples;
                samples.reserve(repeats);
                for (std::size_t r = 0; r < repeats; ++r) {
                    const auto t0 = std::chrono::steady_clock::now();
                    const auto response = backend.rank_window(query, window, mode);
                    samples.push_back(to_ms(std::chrono::steady_clock::now() - t0));
                    cell.decode_tokens = response.decode_token_count;
                }
                cell.repeats = repeats;
                cell.median_ms = median(samples);
                cell.min_ms = *std::min_element(samples.begin(), samples.end());
                cell.max_ms = *std::max_element(samples.begin(), samples.end());
                if (cost_model) cell.simulated_cost = window_cost(*cost_model, cell.prompt_tokens, cell.decode_tokens);
            } catch (const Error& e) {
                cell.valid = false;
                cell.error = e.what();
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

std::vector<AccuracyLatencyRow> bench_accuracy_vs_latency(Backend& backend, const AccuracyLatencyInput& input,
                                                          std::span<const std::size_t> ks, DecodeMode mode,
                                                          RerankConfig config, const PromptTemplate& prompt,
                                                          const std::optional<TokenCostModel>& cost_model) {
    std::vector<AccuracyLatencyRow> rows;
    if (input.queries == nullptr || input.queries->empty()) return rows;
    if (cost_model) cost_model->validate();
    config.mode = mode;

    for (const auto k : ks) {
        config.top_k = k;
        AccuracyLatencyRow row;
        row.k = k;
        row.mode = mode;
        double cost_sum = 0.0;
        for (const auto& query : *input.queries) {
            auto it = input.candidates->find(query.id);
            if (it == input.candidates->end()) continue;
            if (it->second.size() < k) {
                throw Error(Errc::precondition, "query " + query.id + " has fewer than " + std::to_string(k) +
                                                    " candidates");
            }
            double query_cost = 0.0;
            WindowObserver observer;
            if (cost_model) {
                observer = [&](const WindowEvent& ev) {
                    query_cost += window_cost(*cost_model, whitespace_token_count(prompt.render(query, ev.passages)),
                                              ev.response.decode_token_count);
                };
            }
            const auto outcome = rerank(query, it->second, config, backend, *input.corpus, observer);
            const auto run = to_run(outcome.ranked);
            row.mean_latency_ms += to_ms(outcome.backend_time);
            row.mean_windows += static_cast<double>(outcome.windows);
            row.mean_ndcg10 += ndcg_at_k(query.id, run, *input.qrels, 10);
            cost_sum += query_cost;
            ++row.queries;
        }
        if (row.queries > 0) {
            const auto n = static_cast<double>(row.queries);
            row.mean_latency_ms /= n;
            row.mean_windows /= n;
            row.mean_ndcg10 /= n;
            if (cost_model) row.mean_simulated_cost = cost_sum / n;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace logitrank::eval
