#pragma once

// File formats:
//   corpus JSONL    {"id", "title"?, "text"} per line
//   queries JSONL   {"id", "text"} per line
//   embeddings      <path>: little-endian float32, row-major;
//                   <path>.json: {"rows", "dim", "ids": [...]}
//   TREC run        "qid Q0 pid rank score tag", single spaces, rank from 1
//   qrels           "qid 0 pid grade", whitespace separated

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "logitrank/core.hpp"
#include "logitrank/eval.hpp"

namespace logitrank::io {

namespace fs = std::filesystem;

/// Writes to a sibling temp file and renames it over `path`.
void atomic_write(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

/// Passages in file order. A non-empty title is prepended to the text.
std::vector<Passage> read_corpus(const fs::path& path);
std::vector<Query> read_queries(const fs::path& path);
void write_corpus(const fs::path& path, std::span<const Passage> passages);
void write_queries(const fs::path& path, std::span<const Query> queries);
Corpus index_corpus(std::vector<Passage> passages);

fs::path sidecar_path(const fs::path& body_path);
void write_embeddings(const fs::path& body_path, const EmbeddingMatrix& matrix);
EmbeddingMatrix read_embeddings(const fs::path& body_path);

/// Shortest decimal text that parses back to the same double.
std::string format_score(double value);

/// Run records grouped by query, each group in rank order; groups in
/// first-appearance order.
struct Run {
    std::vector<std::string> query_order;
    std::map<std::string, std::vector<eval::RunRecord>> by_query;

    std::vector<eval::RunRecord> flat() const;
};

std::string format_run(std::span<const eval::RunRecord> records, std::string_view run_tag);
Run parse_run(std::string_view text);
Run read_run(const fs::path& path);
void write_run(const fs::path& path, std::span<const eval::RunRecord> records, std::string_view run_tag);

/// One CandidateList per query, ingested from run scores.
std::vector<CandidateList> candidates_from_run(const Run& run);

eval::Qrels parse_qrels(std::string_view text);
eval::Qrels read_qrels(const fs::path& path);
std::string format_qrels(const eval::Qrels& qrels);

}  // namespace logitrank::io
