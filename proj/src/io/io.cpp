#include "logitrank/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_set>

namespace logitrank::io {

using json = nlohmann::json;

void atomic_write(const fs::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io, "cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error(Errc::io, "write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(Errc::io, "cannot rename into " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

template <typename F>
void for_each_line(std::string_view text, F&& f) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        f(line, line_no);
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

template <typename Record, typename Build>
std::vector<Record> read_jsonl(const fs::path& path, Build&& build) {
    std::vector<Record> out;
    std::unordered_set<std::string> ids;
    for_each_line(read_file(path), [&](std::string_view line, std::size_t line_no) {
        if (blank(line)) return;
        try {
            auto record = build(json::parse(line));
            if (record.id.empty()) throw Error(Errc::input, "empty id");
            if (!ids.insert(record.id).second) throw Error(Errc::input, "duplicate id " + record.id);
            out.push_back(std::move(record));
        } catch (const json::exception& e) {
            throw Error(Errc::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.detail());
        }
    });
    return out;
}

}  // namespace

std::vector<Passage> read_corpus(const fs::path& path) {
    return read_jsonl<Passage>(path, [](const json& j) {
        Passage p;
        p.id = j.at("id").get<std::string>();
        const auto text = j.at("text").get<std::string>();
        const auto title = j.value("title", std::string{});
        p.text = title.empty() ? text : title + " " + text;
        return p;
    });
}

std::vector<Query> read_queries(const fs::path& path) {
    return read_jsonl<Query>(path, [](const json& j) {
        Query q;
        q.id = j.at("id").get<std::string>();
        q.text = j.at("text").get<std::string>();
        return q;
    });
}

void write_corpus(const fs::path& path, std::span<const Passage> passages) {
    std::string out;
    for (const auto& p : passages) out += json{{"id", p.id}, {"text", p.text}}.dump() + "\n";
    atomic_write(path, out);
}

void write_queries(const fs::path& path, std::span<const Query> queries) {
    std::string out;
    for (const auto& q : queries) out += json{{"id", q.id}, {"text", q.text}}.dump() + "\n";
    atomic_write(path, out);
}

Corpus index_corpus(std::vector<Passage> passages) {
    Corpus corpus;
    corpus.reserve(passages.size());
    for (auto& p : passages) {
        auto id = p.id;
        corpus.emplace(std::move(id), std::move(p));
    }
    return corpus;
}

fs::path sidecar_path(const fs::path& body_path) {
    auto p = body_path;
    p += ".json";
    return p;
}

void write_embeddings(const fs::path& body_path, const EmbeddingMatrix& matrix) {
    std::string body(matrix.data().size() * 4, '\0');
    std::size_t at = 0;
    for (float v : matrix.data()) {
        auto bits = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) body[at++] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    atomic_write(body_path, body);
    json meta = {{"rows", matrix.rows()}, {"dim", matrix.dim()}, {"ids", matrix.ids()}};
    atomic_write(sidecar_path(body_path), meta.dump() + "\n");
}

EmbeddingMatrix read_embeddings(const fs::path& body_path) {
    std::size_t rows = 0, dim = 0;
    std::vector<std::string> ids;
    try {
        const auto meta = json::parse(read_file(sidecar_path(body_path)));
        rows = meta.at("rows").get<std::size_t>();
        dim = meta.at("dim").get<std::size_t>();
        ids = meta.at("ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw Error(Errc::parse, sidecar_path(body_path).string() + ": " + e.what());
    }
    if (ids.size() != rows) {
        throw Error(Errc::input, "sidecar lists " + std::to_string(ids.size()) + " ids for " +
                                     std::to_string(rows) + " rows");
    }
    const auto body = read_file(body_path);
    if (body.size() != rows * dim * 4) {
        throw Error(Errc::input, body_path.string() + " has " + std::to_string(body.size()) + " bytes, expected " +
                                     std::to_string(rows * dim * 4));
    }
    std::vector<float> data(rows * dim);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(body[4 * i + b])) << (8 * b);
        }
        data[i] = std::bit_cast<float>(bits);
    }
    return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

std::string format_score(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::vector<eval::RunRecord> Run::flat() const {
    std::vector<eval::RunRecord> out;
    for (const auto& q : query_order) {
        const auto& recs = by_query.at(q);
        out.insert(out.end(), recs.begin(), recs.end());
    }
    return out;
}

std::string format_run(std::span<const eval::RunRecord> records, std::string_view run_tag) {
    std::string out;
    for (const auto& r : records) {
        out += r.query_id;
        out += " Q0 ";
        out += r.passage_id;
        out += ' ';
        out += std::to_string(r.rank);
        out += ' ';
        out += format_score(r.score);
        out += ' ';
        out += run_tag;
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const auto start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw Error(Errc::parse, "line " + std::to_string(line_no) + ": bad " + what + " '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

Run parse_run(std::string_view text) {
    Run run;
    std::set<std::pair<std::string, std::string>> seen;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (blank(line)) return;
        const auto f = split_ws(line);
        if (f.size() != 6) {
            throw Error(Errc::parse, "line " + std::to_string(line_no) + ": expected 6 fields, got " +
                                         std::to_string(f.size()));
        }
        eval::RunRecord r{std::string(f[0]), std::string(f[2]), parse_number<std::size_t>(f[3], line_no, "rank"),
                          parse_number<double>(f[4], line_no, "score")};
        if (!seen.emplace(r.query_id, r.passage_id).second) {
            throw Error(Errc::input, "line " + std::to_string(line_no) + ": duplicate (" + r.query_id + ", " +
                                         r.passage_id + ")");
        }
        auto [it, inserted] = run.by_query.try_emplace(r.query_id);
        if (inserted) run.query_order.push_back(r.query_id);
        it->second.push_back(std::move(r));
    });
    for (auto& [qid, recs] : run.by_query) {
        std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
        for (std::size_t i = 0; i < recs.size(); ++i) {
            if (recs[i].rank != i + 1) {
                throw Error(Errc::input, "ranks for query " + qid + " are not contiguous from 1");
            }
        }
    }
    return run;
}

Run read_run(const fs::path& path) {
    try {
        return parse_run(read_file(path));
    } catch (const Error& e) {
        if (e.code() == Errc::io) throw;
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

void write_run(const fs::path& path, std::span<const eval::RunRecord> records, std::string_view run_tag) {
    atomic_write(path, format_run(records, run_tag));
}

std::vector<CandidateList> candidates_from_run(const Run& run) {
    std::vector<CandidateList> out;
    out.reserve(run.query_order.size());
    for (const auto& qid : run.query_order) {
        std::vector<Candidate> entries;
        for (const auto& r : run.by_query.at(qid)) entries.push_back({r.passage_id, r.score});
        out.push_back(CandidateList::ingest(qid, std::move(entries)));
    }
    return out;
}

eval::Qrels parse_qrels(std::string_view text) {
    eval::Qrels qrels;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (blank(line)) return;
        const auto f = split_ws(line);
        if (f.size() != 4) {
            throw Error(Errc::parse, "qrels line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                         std::to_string(f.size()));
        }
        const int grade = parse_number<int>(f[3], line_no, "grade");
        if (grade < 0) throw Error(Errc::parse, "qrels line " + std::to_string(line_no) + ": negative grade");
        qrels.set(std::string(f[0]), std::string(f[2]), grade);
    });
    return qrels;
}

eval::Qrels read_qrels(const fs::path& path) {
    try {
        return parse_qrels(read_file(path));
    } catch (const Error& e) {
        if (e.code() == Errc::io) throw;
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

std::string format_qrels(const eval::Qrels& qrels) {
    std::string out;
    for (const auto& qid : qrels.query_ids()) {
        std::map<std::string, int> sorted(qrels.judged(qid)->begin(), qrels.judged(qid)->end());
        for (const auto& [pid, grade] : sorted) out += qid + " 0 " + pid + " " + std::to_string(grade) + "\n";
    }
    return out;
}

}  // namespace logitrank::io
