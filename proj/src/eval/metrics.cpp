#include <algorithm>
#include <cmath>
#include <functional>

#include "logitrank/eval.hpp"

namespace logitrank::eval {

void Qrels::set(const std::string& query_id, const std::string& passage_id, int grade) {
    if (grade < 0) throw Error(Errc::input, "negative relevance grade for " + query_id + "/" + passage_id);
    judgments_[query_id][passage_id] = grade;
}

int Qrels::grade(const std::string& query_id, const std::string& passage_id) const {
    auto q = judgments_.find(query_id);
    if (q == judgments_.end()) return 0;
    auto p = q->second.find(passage_id);
    return p == q->second.end() ? 0 : p->second;
}

const std::unordered_map<std::string, int>* Qrels::judged(const std::string& query_id) const {
    auto q = judgments_.find(query_id);
    return q == judgments_.end() ? nullptr : &q->second;
}

std::vector<std::string> Qrels::query_ids() const {
    std::vector<std::string> ids;
    ids.reserve(judgments_.size());
    for (const auto& [id, _] : judgments_) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::size_t Qrels::size() const {
    std::size_t n = 0;
    for (const auto& [_, j] : judgments_) n += j.size();
    return n;
}

std::vector<RunRecord> to_run(const CandidateList& list) {
    std::vector<RunRecord> run;
    run.reserve(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& e = list.entries()[i];
        run.push_back({list.query_id(), e.passage_id, i + 1, e.retrieval_score});
    }
    return run;
}

namespace {

void check_sorted(std::span<const RunRecord> run) {
    for (std::size_t i = 1; i < run.size(); ++i) {
        if (run[i].rank <= run[i - 1].rank) {
            throw Error(Errc::input, "run records are not in ascending rank order at rank " +
                                         std::to_string(run[i].rank));
        }
    }
}

}  // namespace

double ndcg_at_k(const std::string& query_id, std::span<const RunRecord> run, const Qrels& qrels, std::size_t k) {
    if (k < 1) throw Error(Errc::precondition, "k must be >= 1");
    check_sorted(run);
    const auto* judged = qrels.judged(query_id);
    if (judged == nullptr) return 0.0;

    std::vector<int> ideal;
    for (const auto& [_, g] : *judged) {
        if (g > 0) ideal.push_back(g);
    }
    if (ideal.empty()) return 0.0;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    auto gain = [](int g) { return std::exp2(static_cast<double>(g)) - 1.0; };
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) idcg += gain(ideal[i]) / std::log2(i + 2.0);

    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, run.size()); ++i) {
        auto it = judged->find(run[i].passage_id);
        if (it != judged->end() && it->second > 0) dcg += gain(it->second) / std::log2(i + 2.0);
    }
    return dcg / idcg;
}

double recall_at_k(const std::string& query_id, std::span<const RunRecord> run, const Qrels& qrels, std::size_t k) {
    if (k < 1) throw Error(Errc::precondition, "k must be >= 1");
    check_sorted(run);
    const auto* judged = qrels.judged(query_id);
    if (judged == nullptr) return 0.0;
    const auto relevant = std::count_if(judged->begin(), judged->end(), [](const auto& kv) { return kv.second > 0; });
    if (relevant == 0) return 0.0;
    std::size_t found = 0;
    for (std::size_t i = 0; i < std::min(k, run.size()); ++i) {
        auto it = judged->find(run[i].passage_id);
        if (it != judged->end() && it->second > 0) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(relevant);
}

bool rank_agreement(const Ranking& logit_ranking, const Ranking& sequence_ranking, std::size_t position) {
    if (logit_ranking.size() != sequence_ranking.size()) {
        throw Error(Errc::length_mismatch, "rankings cover different window sizes");
    }
    if (position >= logit_ranking.size()) throw Error(Errc::precondition, "position outside the window");
    return logit_ranking[position] == sequence_ranking[position];
}

void AgreementTally::add(const Ranking& logit_ranking, const Ranking& sequence_ranking) {
    const auto m = logit_ranking.size();
    if (totals_.size() < m) {
        totals_.resize(m, 0);
        agreed_.resize(m, 0);
    }
    for (std::size_t pos = 0; pos < m; ++pos) {
        ++totals_[pos];
        if (rank_agreement(logit_ranking, sequence_ranking, pos)) ++agreed_[pos];
    }
    ++windows_;
}

double AgreementTally::percent(std::size_t position) const {
    if (position >= totals_.size() || totals_[position] == 0) return 0.0;
    return 100.0 * static_cast<double>(agreed_[position]) / static_cast<double>(totals_[position]);
}

}  // namespace logitrank::eval
