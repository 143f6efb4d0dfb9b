// logitrank: listwise reranking from first-token identifier logits.
//
//   logitrank rerank       --queries Q --corpus C --run R --out OUT
//   logitrank eval         --run R --qrels QR [--metric ndcg --k 10] [--out TSV]
//   logitrank feedback     --query-emb QE --corpus-emb CE --teacher-run T --out-emb E --out RUN
//   logitrank bench        [--kind window|accuracy] --out TSV
//   logitrank agreement    --out TSV
//   logitrank make-fixture --dir DIR
//
// Shared flags: --config, --mode, --window-size, --step, --backend,
// --endpoint, --seed, --workers. Precedence: flags > environment > config file.

#include <CLI11.hpp>
#include <iostream>

#include "logitrank/commands.hpp"

namespace {

using namespace logitrank;

struct Overrides {
    std::string config_path;
    std::optional<std::string> mode;
    std::optional<std::size_t> window_size;
    std::optional<std::size_t> step;
    std::optional<std::size_t> top_k;
    std::optional<std::string> backend;
    std::optional<std::string> endpoint;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> loss;
    std::optional<double> lr;
    std::optional<int> steps;
    std::optional<std::size_t> depth;
    std::optional<std::size_t> retrieve_k;
};

AppConfig resolve_config(const Overrides& o) {
    AppConfig c = o.config_path.empty() ? AppConfig{} : load_config(o.config_path);
    apply_env(c, process_env());
    if (o.mode) c.rerank.mode = parse_decode_mode(*o.mode);
    if (o.window_size) c.rerank.window_size = *o.window_size;
    if (o.step) c.rerank.step = *o.step;
    if (o.top_k) c.rerank.top_k = *o.top_k;
    if (o.backend) c.backend = parse_backend_kind(*o.backend);
    if (o.endpoint) c.http.endpoint = *o.endpoint;
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    if (o.loss) c.feedback.loss_kind = parse_loss_kind(*o.loss);
    if (o.lr) c.feedback.learning_rate = *o.lr;
    if (o.steps) c.feedback.steps = *o.steps;
    if (o.depth) c.feedback_depth = *o.depth;
    if (o.retrieve_k) c.retrieve_k = *o.retrieve_k;
    c.rerank.validate();
    c.feedback.validate();
    return c;
}

std::vector<DecodeMode> parse_modes(const std::vector<std::string>& names) {
    std::vector<DecodeMode> out;
    for (const auto& n : names) out.push_back(parse_decode_mode(n));
    return out;
}

void add_dataset_options(CLI::App* cmd, cli::DatasetArgs& d) {
    cmd->add_option("--queries", d.queries, "Queries JSONL (omit all inputs to use the synthetic fixture)");
    cmd->add_option("--corpus", d.corpus, "Corpus JSONL");
    cmd->add_option("--run", d.run, "First-stage TREC run");
    cmd->add_option("--qrels", d.qrels, "Relevance judgments");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Listwise passage reranking from first-token identifier logits"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--mode", o.mode, "first_token | sequence | both");
    app.add_option("--window-size", o.window_size, "Window size m (1..26)");
    app.add_option("--step", o.step, "Window step s (1..m)");
    app.add_option("--top-k", o.top_k, "Candidates reranked per query (0 = all)");
    app.add_option("--backend", o.backend, "mock | http");
    app.add_option("--endpoint", o.endpoint, "Completion endpoint URL for the http backend");
    app.add_option("--seed", o.seed, "Seed for synthetic data");
    app.add_option("--workers", o.workers, "Queries reranked in parallel");

    cli::RerankArgs rerank_args;
    auto* rerank = app.add_subcommand("rerank", "Rerank a first-stage run");
    rerank->add_option("--queries", rerank_args.queries)->required();
    rerank->add_option("--corpus", rerank_args.corpus)->required();
    rerank->add_option("--run", rerank_args.run)->required();
    rerank->add_option("--out", rerank_args.out)->required();

    cli::EvalArgs eval_args;
    std::string eval_out;
    auto* eval = app.add_subcommand("eval", "Score a run against qrels");
    eval->add_option("--run", eval_args.run)->required();
    eval->add_option("--qrels", eval_args.qrels)->required();
    eval->add_option("--metric", eval_args.metrics, "ndcg and/or recall")->capture_default_str();
    eval->add_option("--k", eval_args.ks, "Cutoffs")->capture_default_str();
    eval->add_option("--out", eval_out, "Per-query TSV at full precision");

    cli::FeedbackArgs fb_args;
    std::string teacher_run, teacher_scores;
    auto* fb = app.add_subcommand("feedback", "Relevance feedback on query embeddings");
    fb->add_option("--query-emb", fb_args.query_embeddings)->required();
    fb->add_option("--corpus-emb", fb_args.corpus_embeddings)->required();
    fb->add_option("--teacher-run", teacher_run, "Reranker ordering (TREC run)");
    fb->add_option("--teacher-scores", teacher_scores, "Cross-encoder scores (TREC run)");
    fb->add_option("--out-emb", fb_args.out_embeddings)->required();
    fb->add_option("--out", fb_args.out_run, "Second-stage run")->required();
    fb->add_option("--loss", o.loss, "ranknet | kl | combined");
    fb->add_option("--lr", o.lr, "RankNet learning rate");
    fb->add_option("--steps", o.steps, "RankNet steps");
    fb->add_option("--depth", o.depth, "First-stage passages the teacher covers");
    fb->add_option("--retrieve-k", o.retrieve_k, "Second-stage depth");

    cli::BenchArgs bench_args;
    std::vector<std::string> bench_modes{"first_token", "sequence"};
    bool no_simulate = false;
    auto* bench = app.add_subcommand("bench", "Latency and cost benchmarks");
    add_dataset_options(bench, bench_args.data);
    bench->add_option("--kind", bench_args.kind, "window | accuracy")->capture_default_str();
    bench->add_option("--m", bench_args.window_sizes, "Window sizes")->capture_default_str();
    bench->add_option("--k", bench_args.ks, "Rerank depths for --kind accuracy")->capture_default_str();
    bench->add_option("--modes", bench_modes, "Decode modes")->capture_default_str();
    bench->add_option("--repeats", bench_args.repeats)->capture_default_str();
    bench->add_flag("--no-simulate", no_simulate, "Skip the token-cost model");
    bench->add_option("--out", bench_args.out)->required();

    cli::AgreementArgs agree_args;
    auto* agree = app.add_subcommand("agreement", "Sequence vs logit rank agreement per position");
    add_dataset_options(agree, agree_args.data);
    agree->add_option("--out", agree_args.out)->required();

    cli::MakeFixtureArgs fixture_args;
    auto* make_fixture = app.add_subcommand("make-fixture", "Write the seeded synthetic data sets");
    make_fixture->add_option("--dir,--out", fixture_args.dir)->required();
    make_fixture->add_option("--kind", fixture_args.kind, "text | embedding | all")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
    }

    try {
        const auto config = resolve_config(o);
        if (rerank->parsed()) {
            cli::cmd_rerank(rerank_args, config, std::cerr);
        } else if (eval->parsed()) {
            if (!eval_out.empty()) eval_args.out = eval_out;
            cli::cmd_eval(eval_args, std::cout);
        } else if (fb->parsed()) {
            if (!teacher_run.empty()) fb_args.teacher_run = teacher_run;
            if (!teacher_scores.empty()) fb_args.teacher_scores = teacher_scores;
            cli::cmd_feedback(fb_args, config, std::cerr);
        } else if (bench->parsed()) {
            bench_args.modes = parse_modes(bench_modes);
            bench_args.simulate = !no_simulate;
            cli::cmd_bench(bench_args, config, std::cerr);
        } else if (agree->parsed()) {
            cli::cmd_agreement(agree_args, config, std::cerr);
        } else if (make_fixture->parsed()) {
            cli::cmd_make_fixture(fixture_args, config, std::cerr);
        }
    } catch (const Error& e) {
        std::cerr << "logitrank: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
