#include "logitrank/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "logitrank/eval.hpp"
#include "logitrank/feedback.hpp"
#include "logitrank/fixture.hpp"
#include "logitrank/http_backend.hpp"
#include "logitrank/io.hpp"
#include "logitrank/reranker.hpp"

namespace logitrank::cli {

using json = nlohmann::json;

std::unique_ptr<Backend> make_backend(const AppConfig& config) {
    if (config.backend == BackendKind::mock) return std::make_unique<MockBackend>();
    return std::make_unique<HttpBackend>(config.http);
}

namespace {

constexpr std::size_t kMaxOffenders = 10;

void check_offenders(const std::vector<std::string>& offenders, const std::string& what) {
    if (offenders.empty()) return;
    std::string msg = std::to_string(offenders.size()) + " " + what + ":";
    for (std::size_t i = 0; i < std::min(offenders.size(), kMaxOffenders); ++i) msg += " " + offenders[i];
    if (offenders.size() > kMaxOffenders) msg += " ...";
    throw Error(Errc::input, msg);
}

struct Dataset {
    std::vector<Query> queries;
    Corpus corpus;
    std::vector<CandidateList> candidates;
    std::optional<eval::Qrels> qrels;
    std::string source;
};

/// Checks that every candidate resolves to a passage and every run query to
/// a query record. Returns the query for each candidate list, in list order.
std::vector<const Query*> resolve(const std::vector<CandidateList>& lists, const std::vector<Query>& queries,
                                  const Corpus& corpus) {
    std::unordered_map<std::string, const Query*> by_id;
    for (const auto& q : queries) by_id.emplace(q.id, &q);

    std::vector<std::string> missing_passages;
    std::unordered_set<std::string> reported;
    std::vector<std::string> missing_queries;
    std::vector<const Query*> out;
    for (const auto& list : lists) {
        auto it = by_id.find(list.query_id());
        if (it == by_id.end()) missing_queries.push_back(list.query_id());
        out.push_back(it == by_id.end() ? nullptr : it->second);
        for (const auto& e : list.entries()) {
            if (!corpus.count(e.passage_id) && reported.insert(e.passage_id).second) {
                missing_passages.push_back(e.passage_id);
            }
        }
    }
    check_offenders(missing_passages, "run passage ids not in corpus");
    check_offenders(missing_queries, "run query ids not in queries file");
    return out;
}

Dataset load_dataset(const DatasetArgs& args, std::uint64_t seed) {
    Dataset d;
    if (args.queries.empty() && args.corpus.empty() && args.run.empty()) {
        auto fx = fixture::make_text_fixture(seed);
        d.queries = std::move(fx.queries);
        d.corpus = io::index_corpus(std::move(fx.passages));
        d.candidates = std::move(fx.candidates);
        d.qrels = std::move(fx.qrels);
        d.source = "synthetic text fixture, seed " + std::to_string(seed);
        return d;
    }
    if (args.queries.empty() || args.corpus.empty() || args.run.empty()) {
        throw Error(Errc::config, "--queries, --corpus and --run must be given together");
    }
    d.queries = io::read_queries(args.queries);
    d.corpus = io::index_corpus(io::read_corpus(args.corpus));
    d.candidates = io::candidates_from_run(io::read_run(args.run));
    if (!args.qrels.empty()) d.qrels = io::read_qrels(args.qrels);
    d.source = args.run.string();
    return d;
}

std::vector<Passage> passages_for(const CandidateList& list, const Corpus& corpus) {
    std::vector<Passage> out;
    out.reserve(list.size());
    for (const auto& e : list.entries()) out.push_back(corpus.at(e.passage_id));
    return out;
}

std::string percent1(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
    return buf;
}

std::string optional_number(const std::optional<double>& v) { return v ? io::format_score(*v) : ""; }

}  // namespace

void cmd_rerank(const RerankArgs& args, const AppConfig& config, std::ostream& log) {
    config.rerank.validate();
    const auto queries = io::read_queries(args.queries);
    const auto corpus = io::index_corpus(io::read_corpus(args.corpus));
    const auto lists = io::candidates_from_run(io::read_run(args.run));
    const auto query_of = resolve(lists, queries, corpus);

    std::vector<RerankJob> jobs;
    for (std::size_t i = 0; i < lists.size(); ++i) jobs.push_back({query_of[i], &lists[i]});

    auto backend = make_backend(config);
    log << "rerank: backend=" << backend->name() << " mode=" << to_string(config.rerank.mode)
        << " window=" << config.rerank.window_size << " step=" << config.rerank.step
        << " top_k=" << config.rerank.top_k << "\n";
    const auto outcomes = rerank_all(jobs, config.rerank, *backend, corpus, std::max<std::size_t>(config.workers, 1));

    std::vector<eval::RunRecord> records;
    for (const auto& o : outcomes) {
        log << "query " << o.ranked.query_id() << ": " << o.windows << " windows, " << o.backend_calls
            << " backend calls\n";
        const auto run = eval::to_run(o.ranked);
        records.insert(records.end(), run.begin(), run.end());
    }
    io::write_run(args.out, records, config.run_tag);
}

void cmd_eval(const EvalArgs& args, std::ostream& display) {
    const auto run = io::read_run(args.run);
    const auto qrels = io::read_qrels(args.qrels);

    struct Column {
        std::string name;
        bool ndcg;
        std::size_t k;
    };
    std::vector<Column> columns;
    for (const auto& m : args.metrics) {
        if (m != "ndcg" && m != "recall") throw Error(Errc::config, "unknown metric: " + m);
        for (const auto k : args.ks) {
            if (k < 1) throw Error(Errc::config, "metric depth must be at least 1");
            columns.push_back({m + "@" + std::to_string(k), m == "ndcg", k});
        }
    }
    if (columns.empty()) throw Error(Errc::config, "no metrics requested");

    std::vector<std::string> evaluated;
    for (const auto& qid : run.query_order) {
        if (qrels.has_query(qid)) evaluated.push_back(qid);
    }
    if (evaluated.empty()) throw Error(Errc::input, "run and qrels share no query ids");

    std::vector<double> sums(columns.size(), 0.0);
    std::string tsv = "query_id";
    for (const auto& c : columns) tsv += "\t" + c.name;
    tsv += "\n";
    for (const auto& qid : evaluated) {
        const auto& recs = run.by_query.at(qid);
        tsv += qid;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const double v = columns[c].ndcg ? eval::ndcg_at_k(qid, recs, qrels, columns[c].k)
                                             : eval::recall_at_k(qid, recs, qrels, columns[c].k);
            sums[c] += v;
            tsv += "\t" + io::format_score(v);
        }
        tsv += "\n";
    }
    const double n = static_cast<double>(evaluated.size());
    tsv += "mean";
    for (const auto s : sums) tsv += "\t" + io::format_score(s / n);
    tsv += "\n";
    if (args.out) io::atomic_write(*args.out, tsv);

    display << "queries\t" << evaluated.size();
    if (evaluated.size() < run.query_order.size()) {
        display << " (" << run.query_order.size() - evaluated.size() << " run queries without judgments skipped)";
    }
    display << "\n";
    for (std::size_t c = 0; c < columns.size(); ++c) display << columns[c].name << "\t" << percent1(sums[c] / n) << "\n";
}

void cmd_feedback(const FeedbackArgs& args, const AppConfig& config, std::ostream& log) {
    const auto& fb = config.feedback;
    fb.validate();
    const auto queries = io::read_embeddings(args.query_embeddings);
    const auto corpus = io::read_embeddings(args.corpus_embeddings);
    if (queries.dim() != corpus.dim()) {
        throw Error(Errc::dimension_mismatch, "query embeddings have dim " + std::to_string(queries.dim()) +
                                                  ", corpus has " + std::to_string(corpus.dim()));
    }
    std::optional<io::Run> teacher_run;
    std::optional<io::Run> teacher_scores;
    if (args.teacher_run) teacher_run = io::read_run(*args.teacher_run);
    if (args.teacher_scores) teacher_scores = io::read_run(*args.teacher_scores);

    log << "feedback: loss=" << to_string(fb.loss_kind);
    if (fb.loss_kind != feedback::LossKind::kl) log << " lr=" << fb.learning_rate << " steps=" << fb.steps;
    if (fb.loss_kind != feedback::LossKind::ranknet) {
        log << " kl_lr=" << fb.kl_learning_rate << " kl_steps=" << fb.kl_steps;
    }
    log << " depth=" << config.feedback_depth << " retrieve_k=" << config.retrieve_k << "\n";

    std::vector<float> updated_data;
    std::vector<eval::RunRecord> records;
    for (std::size_t r = 0; r < queries.rows(); ++r) {
        const auto& qid = queries.ids()[r];
        const auto q = queries.vector_at(r);
        const auto first = feedback::second_stage_retrieve(qid, q, corpus, config.feedback_depth);
        std::vector<std::string> retrieved;
        for (const auto& e : first.entries()) retrieved.push_back(e.passage_id);
        const auto passages = corpus.select(retrieved);

        std::optional<Ranking> order;
        if (teacher_run) {
            auto it = teacher_run->by_query.find(qid);
            if (it == teacher_run->by_query.end()) throw Error(Errc::input, "teacher run has no query " + qid);
            std::unordered_map<std::string, std::size_t> teacher_rank;
            for (const auto& rec : it->second) teacher_rank.emplace(rec.passage_id, rec.rank);
            std::vector<std::size_t> slots(retrieved.size());
            for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
            std::stable_sort(slots.begin(), slots.end(), [&](std::size_t a, std::size_t b) {
                auto ra = teacher_rank.find(retrieved[a]);
                auto rb = teacher_rank.find(retrieved[b]);
                if (ra == teacher_rank.end()) return false;
                if (rb == teacher_rank.end()) return true;
                return ra->second < rb->second;
            });
            order = Ranking(std::move(slots));
        }
        std::optional<std::vector<double>> scores;
        if (teacher_scores) {
            auto it = teacher_scores->by_query.find(qid);
            if (it == teacher_scores->by_query.end()) throw Error(Errc::input, "teacher scores have no query " + qid);
            std::unordered_map<std::string, double> by_pid;
            for (const auto& rec : it->second) by_pid.emplace(rec.passage_id, rec.score);
            scores.emplace();
            for (const auto& pid : retrieved) {
                auto s = by_pid.find(pid);
                if (s == by_pid.end()) throw Error(Errc::input, "no teacher score for " + qid + " / " + pid);
                scores->push_back(s->second);
            }
        }

        EmbeddingVector updated;
        try {
            updated = feedback::run_feedback(q, passages, order, scores, fb);
        } catch (const Error& e) {
            throw Error(e.code(), "query " + qid + ": " + e.detail());
        }
        updated_data.insert(updated_data.end(), updated.components().begin(), updated.components().end());
        const auto second = eval::to_run(feedback::second_stage_retrieve(qid, updated, corpus, config.retrieve_k));
        records.insert(records.end(), second.begin(), second.end());
    }
    io::write_embeddings(args.out_embeddings, EmbeddingMatrix(queries.ids(), queries.dim(), std::move(updated_data)));
    io::write_run(args.out_run, records, config.run_tag);
    log << "feedback: " << queries.rows() << " queries updated\n";
}

void cmd_bench(const BenchArgs& args, const AppConfig& config, std::ostream& log) {
    const auto data = load_dataset(args.data, config.seed);
    if (data.candidates.empty()) throw Error(Errc::input, "bench needs at least one query");
    auto backend = make_backend(config);
    const auto& prompt = config.http.prompt;
    const std::optional<TokenCostModel> cost = args.simulate ? std::optional(config.cost_model) : std::nullopt;

    json meta = {{"kind", args.kind},
                 {"backend", backend->name()},
                 {"source", data.source},
                 {"seed", config.seed},
                 {"prompt_tokens", "whitespace-token approximation, not model tokenizer counts"}};
    if (cost) {
        meta["cost_model"] = {{"prefill_cost_per_token", cost->prefill_cost_per_token},
                              {"decode_cost_per_token", cost->decode_cost_per_token},
                              {"window_cost", "prompt * prefill + (decode_tokens - 1) * decode"}};
    }

    std::string tsv;
    if (args.kind == "window") {
        const auto resolve_q = resolve({data.candidates.front()}, data.queries, data.corpus);
        const auto pool = passages_for(data.candidates.front(), data.corpus);
        const auto report = eval::bench_window_latency(*backend, *resolve_q.front(), pool, args.window_sizes,
                                                       args.modes, args.repeats, prompt, cost);
        tsv = "window_size\tmode\tvalid\trepeats\tmedian_ms\tmin_ms\tmax_ms\tprompt_tokens_ws\tdecode_tokens\t"
              "simulated_cost\terror\n";
        for (const auto& c : report.cells) {
            tsv += std::to_string(c.window_size) + "\t" + std::string(to_string(c.mode)) + "\t" +
                   (c.valid ? "1" : "0") + "\t" + std::to_string(c.repeats) + "\t" + io::format_score(c.median_ms) +
                   "\t" + io::format_score(c.min_ms) + "\t" + io::format_score(c.max_ms) + "\t" +
                   std::to_string(c.prompt_tokens) + "\t" + std::to_string(c.decode_tokens) + "\t" +
                   optional_number(c.simulated_cost) + "\t" + c.error + "\n";
            log << "m=" << c.window_size << " " << to_string(c.mode)
                << (c.valid ? " median_ms=" + io::format_score(c.median_ms) : " invalid: " + c.error) << "\n";
        }
        meta["query_id"] = data.candidates.front().query_id();
        meta["repeats"] = args.repeats;
    } else if (args.kind == "accuracy") {
        if (!data.qrels) throw Error(Errc::config, "accuracy bench needs --qrels");
        std::unordered_map<std::string, CandidateList> by_query;
        for (const auto& list : data.candidates) by_query.emplace(list.query_id(), list);
        resolve(data.candidates, data.queries, data.corpus);
        std::vector<Query> judged;
        for (const auto& q : data.queries) {
            if (by_query.count(q.id)) judged.push_back(q);
        }
        const eval::AccuracyLatencyInput input{&judged, &by_query, &data.corpus, &*data.qrels};
        tsv = "k\tmode\tqueries\tmean_latency_ms\tmean_windows\tmean_ndcg10\tmean_simulated_cost\n";
        for (const auto mode : args.modes) {
            for (const auto& row :
                 eval::bench_accuracy_vs_latency(*backend, input, args.ks, mode, config.rerank, prompt, cost)) {
                tsv += std::to_string(row.k) + "\t" + std::string(to_string(row.mode)) + "\t" +
                       std::to_string(row.queries) + "\t" + io::format_score(row.mean_latency_ms) + "\t" +
                       io::format_score(row.mean_windows) + "\t" + io::format_score(row.mean_ndcg10) + "\t" +
                       optional_number(row.mean_simulated_cost) + "\n";
                log << "k=" << row.k << " " << to_string(row.mode) << " ndcg@10=" << percent1(row.mean_ndcg10)
                    << "\n";
            }
        }
        meta["window_size"] = config.rerank.window_size;
        meta["step"] = config.rerank.step;
    } else {
        throw Error(Errc::config, "bench kind must be window or accuracy, got " + args.kind);
    }
    io::atomic_write(args.out, tsv);
    auto meta_path = args.out;
    meta_path += ".meta.json";
    io::atomic_write(meta_path, meta.dump(2) + "\n");
}

void cmd_agreement(const AgreementArgs& args, const AppConfig& config, std::ostream& log) {
    const auto data = load_dataset(args.data, config.seed);
    const auto query_of = resolve(data.candidates, data.queries, data.corpus);
    auto backend = make_backend(config);
    auto rc = config.rerank;
    rc.mode = DecodeMode::both;

    eval::AgreementTally tally;
    std::size_t skipped = 0;
    const WindowObserver observer = [&](const WindowEvent& ev) {
        const auto& r = ev.response;
        if (!r.first_token_logits || !r.generated_sequence) {
            ++skipped;
            return;
        }
        tally.add(rank_from_logits(*r.first_token_logits), rank_from_sequence(*r.generated_sequence, ev.size));
    };
    for (std::size_t i = 0; i < data.candidates.size(); ++i) {
        rerank(*query_of[i], data.candidates[i], rc, *backend, data.corpus, observer);
    }

    std::string tsv = "position\tagreed\ttotal\tpercent\n";
    for (std::size_t p = 0; p < tally.positions(); ++p) {
        tsv += std::to_string(p + 1) + "\t" + std::to_string(tally.agreed(p)) + "\t" + std::to_string(tally.total(p)) +
               "\t" + io::format_score(tally.percent(p)) + "\n";
    }
    io::atomic_write(args.out, tsv);
    json meta = {{"aggregation",
                  "per window: every window of every query counts once; position p is counted only for windows "
                  "with at least p slots"},
                 {"backend", backend->name()},
                 {"source", data.source},
                 {"seed", config.seed},
                 {"queries", data.candidates.size()},
                 {"windows", tally.windows()},
                 {"windows_missing_a_decode", skipped},
                 {"window_size", rc.window_size},
                 {"step", rc.step},
                 {"top_k", rc.top_k}};
    auto meta_path = args.out;
    meta_path += ".meta.json";
    io::atomic_write(meta_path, meta.dump(2) + "\n");
    log << "agreement: " << tally.windows() << " windows over " << data.candidates.size() << " queries\n";
}

void cmd_make_fixture(const MakeFixtureArgs& args, const AppConfig& config, std::ostream& log) {
    const bool text = args.kind == "text" || args.kind == "all";
    const bool emb = args.kind == "embedding" || args.kind == "all";
    if (!text && !emb) throw Error(Errc::config, "fixture kind must be text, embedding or all");
    std::error_code ec;
    fs::create_directories(args.dir, ec);
    if (ec) throw Error(Errc::io, "cannot create " + args.dir.string());

    json meta = {{"seed", config.seed}, {"generator", "mt19937_64"}};
    if (text) {
        const fixture::TextOptions opt;
        const auto fx = fixture::make_text_fixture(config.seed, opt);
        io::write_corpus(args.dir / "corpus.jsonl", fx.passages);
        io::write_queries(args.dir / "queries.jsonl", fx.queries);
        std::vector<eval::RunRecord> records;
        for (const auto& list : fx.candidates) {
            const auto run = eval::to_run(list);
            records.insert(records.end(), run.begin(), run.end());
        }
        io::write_run(args.dir / "run.trec", records, "retrieval");
        io::atomic_write(args.dir / "qrels.txt", io::format_qrels(fx.qrels));
        meta["text"] = {{"queries", opt.queries},
                        {"candidates_per_query", opt.candidates_per_query},
                        {"query_terms", opt.query_terms},
                        {"passage_terms", opt.passage_terms},
                        {"vocabulary", opt.vocabulary},
                        {"retrieval_noise", opt.retrieval_noise}};
        log << "text fixture: " << fx.queries.size() << " queries, " << fx.passages.size() << " passages\n";
    }
    if (emb) {
        const fixture::EmbeddingOptions opt;
        const auto fx = fixture::make_embedding_fixture(config.seed, opt);
        io::write_embeddings(args.dir / "emb_corpus.f32", fx.corpus);
        io::write_embeddings(args.dir / "emb_queries.f32", fx.query_matrix());
        io::atomic_write(args.dir / "emb_qrels.txt", io::format_qrels(fx.qrels));
        std::vector<eval::RunRecord> order_records;
        std::vector<eval::RunRecord> ce_records;
        for (const auto& c : fx.cases) {
            const auto n = c.retrieved.size();
            for (std::size_t pos = 0; pos < n; ++pos) {
                order_records.push_back(
                    {c.query_id, c.retrieved[c.teacher_order[pos]], pos + 1, static_cast<double>(n - pos)});
            }
            std::vector<Candidate> ce;
            for (std::size_t i = 0; i < n; ++i) ce.push_back({c.retrieved[i], c.teacher_ce[i]});
            const auto ce_run = eval::to_run(CandidateList::ingest(c.query_id, std::move(ce)));
            ce_records.insert(ce_records.end(), ce_run.begin(), ce_run.end());
        }
        io::write_run(args.dir / "emb_teacher_llm.trec", order_records, "teacher-llm");
        io::write_run(args.dir / "emb_teacher_ce.trec", ce_records, "teacher-ce");
        meta["embedding"] = {{"dim", opt.dim},
                             {"corpus_size", opt.corpus_size},
                             {"queries", opt.queries},
                             {"relevant_per_query", opt.relevant_per_query},
                             {"passage_scale", opt.passage_scale},
                             {"relevant_noise", opt.relevant_noise},
                             {"min_planted_rank", opt.min_planted_rank},
                             {"retrieve_depth", opt.retrieve_depth},
                             {"ce_scale", opt.ce_scale},
                             {"ce_noise", opt.ce_noise}};
        log << "embedding fixture: " << fx.cases.size() << " queries, " << fx.corpus.rows() << " passages\n";
    }
    io::atomic_write(args.dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace logitrank::cli
