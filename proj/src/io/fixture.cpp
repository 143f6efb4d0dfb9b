#include "logitrank/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <unordered_set>

#include "logitrank/feedback.hpp"

namespace logitrank::fixture {

namespace {

std::string padded(char prefix, std::size_t n, int width) {
    auto digits = std::to_string(n);
    if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

std::string word(std::size_t i) { return padded('w', i, 4); }

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

int grade_for_overlap(std::size_t overlap) { return overlap >= 5 ? 2 : overlap >= 3 ? 1 : 0; }

}  // namespace

TextFixture make_text_fixture(std::uint64_t seed, const TextOptions& opt) {
    if (opt.query_terms == 0 || opt.query_terms > opt.passage_terms || opt.vocabulary < 2 * opt.passage_terms) {
        throw Error(Errc::config, "text fixture options are inconsistent");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_word(0, opt.vocabulary - 1);
    std::normal_distribution<double> noise(0.0, opt.retrieval_noise);
    // Overlap counts 0..6, skewed towards few shared terms.
    std::discrete_distribution<std::size_t> overlap_dist({40, 25, 15, 10, 5, 3, 2});

    TextFixture fx;
    std::size_t next_passage = 0;
    for (std::size_t qi = 0; qi < opt.queries; ++qi) {
        std::vector<std::string> qwords;
        std::unordered_set<std::size_t> qset;
        while (qwords.size() < opt.query_terms) {
            const auto w = pick_word(rng);
            if (qset.insert(w).second) qwords.push_back(word(w));
        }
        Query q{padded('q', qi, 3), join(qwords), std::nullopt};

        std::vector<Candidate> entries;
        for (std::size_t ci = 0; ci < opt.candidates_per_query; ++ci) {
            auto overlap = std::min(overlap_dist(rng), opt.query_terms);
            // Every query gets at least one relevant passage.
            if (ci == 0) overlap = std::max<std::size_t>(overlap, 3);

            std::vector<std::string> shared = qwords;
            std::shuffle(shared.begin(), shared.end(), rng);
            shared.resize(overlap);
            std::vector<std::string> words = shared;
            while (words.size() < opt.passage_terms) {
                const auto w = pick_word(rng);
                if (!qset.count(w)) words.push_back(word(w));
            }
            std::shuffle(words.begin(), words.end(), rng);

            Passage p{padded('d', next_passage++, 6), join(words), std::nullopt};
            entries.push_back({p.id, static_cast<double>(overlap) + noise(rng)});
            if (const int g = grade_for_overlap(overlap); g > 0) fx.qrels.set(q.id, p.id, g);
            fx.passages.push_back(std::move(p));
        }
        fx.candidates.push_back(CandidateList::ingest(q.id, std::move(entries)));
        fx.queries.push_back(std::move(q));
    }
    return fx;
}

namespace {

using Vec = std::vector<double>;

Vec gaussian(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(dim);
    for (auto& x : v) x = n(rng);
    return v;
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vec normalized(Vec v) {
    const double n = std::sqrt(dot(v, v));
    for (auto& x : v) x /= n;
    return v;
}

EmbeddingVector to_embedding(const Vec& v) {
    std::vector<float> f(v.begin(), v.end());
    return EmbeddingVector(std::move(f));
}

}  // namespace

EmbeddingMatrix EmbeddingFixture::query_matrix() const {
    std::vector<std::string> ids;
    std::vector<float> data;
    for (const auto& c : cases) {
        ids.push_back(c.query_id);
        data.insert(data.end(), c.query.components().begin(), c.query.components().end());
    }
    const auto dim = cases.empty() ? 0 : cases.front().query.dimension();
    return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

Ranking ideal_order(const std::string& query_id, const std::vector<std::string>& retrieved,
                    const eval::Qrels& qrels) {
    std::vector<std::size_t> order(retrieved.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_partition(order.begin(), order.end(),
                          [&](std::size_t i) { return qrels.grade(query_id, retrieved[i]) > 0; });
    return Ranking(std::move(order));
}

EmbeddingFixture make_embedding_fixture(std::uint64_t seed, const EmbeddingOptions& opt) {
    const auto planted_total = opt.queries * opt.relevant_per_query;
    if (opt.dim < 2 || planted_total > opt.corpus_size || opt.retrieve_depth > opt.corpus_size ||
        opt.min_planted_rank + opt.relevant_per_query - 1 > opt.retrieve_depth) {
        throw Error(Errc::config, "embedding fixture options are inconsistent");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> ce_noise(0.0, opt.ce_noise);
    const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(opt.dim));

    // Passages: planted ones first (query-major), background after. Ids are
    // shuffled so position does not leak relevance.
    std::vector<Vec> intents;
    std::vector<Vec> rows;
    for (std::size_t qi = 0; qi < opt.queries; ++qi) {
        intents.push_back(normalized(gaussian(rng, opt.dim)));
        for (std::size_t r = 0; r < opt.relevant_per_query; ++r) {
            auto g = gaussian(rng, opt.dim);
            Vec p(opt.dim);
            for (std::size_t d = 0; d < opt.dim; ++d) p[d] = intents[qi][d] + opt.relevant_noise * g[d] * inv_sqrt_dim;
            p = normalized(std::move(p));
            for (auto& x : p) x *= opt.passage_scale;
            rows.push_back(std::move(p));
        }
    }
    while (rows.size() < opt.corpus_size) {
        auto g = gaussian(rng, opt.dim);
        for (auto& x : g) x *= opt.passage_scale * inv_sqrt_dim;
        rows.push_back(std::move(g));
    }
    std::vector<std::size_t> id_of(rows.size());
    for (std::size_t i = 0; i < id_of.size(); ++i) id_of[i] = i;
    std::shuffle(id_of.begin(), id_of.end(), rng);

    std::vector<std::string> ids(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) ids[id_of[i]] = padded('e', i, 4);
    std::vector<float> data(rows.size() * opt.dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t d = 0; d < opt.dim; ++d) data[id_of[i] * opt.dim + d] = static_cast<float>(rows[i][d]);
    }

    EmbeddingFixture fx;
    fx.corpus = EmbeddingMatrix(ids, opt.dim, std::move(data));
    std::vector<std::string> row_id(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) row_id[i] = ids[id_of[i]];

    constexpr int kAngles = 400;
    constexpr int kAttempts = 64;
    for (std::size_t qi = 0; qi < opt.queries; ++qi) {
        const auto qid = padded('f', qi, 3);
        std::unordered_set<std::string> planted;
        for (std::size_t r = 0; r < opt.relevant_per_query; ++r) {
            const auto& pid = row_id[qi * opt.relevant_per_query + r];
            planted.insert(pid);
            fx.qrels.set(qid, pid, 1);
        }
        const auto& u = intents[qi];

        std::optional<FeedbackCase> found;
        for (int attempt = 0; attempt < kAttempts && !found; ++attempt) {
            // Direction orthogonal to u to rotate towards.
            auto v = gaussian(rng, opt.dim);
            const double along = dot(v, u);
            for (std::size_t d = 0; d < opt.dim; ++d) v[d] -= along * u[d];
            v = normalized(std::move(v));

            for (int a = 1; a <= kAngles && !found; ++a) {
                const double theta = 0.5 * std::numbers::pi * a / kAngles;
                Vec q(opt.dim);
                for (std::size_t d = 0; d < opt.dim; ++d) q[d] = std::cos(theta) * u[d] + std::sin(theta) * v[d];
                const auto qe = to_embedding(q);
                const auto top = feedback::second_stage_retrieve(qid, qe, fx.corpus, opt.retrieve_depth);
                std::size_t inside = 0;
                bool too_high = false;
                for (std::size_t pos = 0; pos < top.size(); ++pos) {
                    if (!planted.count(top.entries()[pos].passage_id)) continue;
                    ++inside;
                    if (pos + 1 < opt.min_planted_rank) too_high = true;
                }
                if (too_high) continue;
                if (inside < opt.relevant_per_query) break;  // rotated past the window
                FeedbackCase c;
                c.query_id = qid;
                c.query = qe;
                for (const auto& e : top.entries()) c.retrieved.push_back(e.passage_id);
                found = std::move(c);
            }
        }
        if (!found) throw Error(Errc::config, "could not place planted passages for query " + qid);

        found->teacher_order = ideal_order(qid, found->retrieved, fx.qrels);
        for (const auto& pid : found->retrieved) {
            found->teacher_ce.push_back(opt.ce_scale * fx.qrels.grade(qid, pid) + ce_noise(rng));
        }
        fx.cases.push_back(std::move(*found));
    }
    return fx;
}

}  // namespace logitrank::fixture
