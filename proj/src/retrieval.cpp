#include "totsim/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "totsim/error.hpp"

namespace totsim {

using nlohmann::json;

void order_and_truncate(Ranking& ranking, std::size_t depth) {
    auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    };
    if (ranking.size() > depth) {
        std::partial_sort(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(depth),
                          ranking.end(), better);
        ranking.resize(depth);
    } else {
        std::sort(ranking.begin(), ranking.end(), better);
    }
}

double bm25_idf(std::size_t n_docs, std::size_t df) {
    const auto n = static_cast<double>(n_docs);
    const auto d = static_cast<double>(df);
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

namespace {

struct QueryTerm {
    std::span<const InvertedIndex::Posting> postings;
};

// Query tokens that occur in the collection, in query order (repeats kept).
std::vector<QueryTerm> resolve_query(std::string_view query, const InvertedIndex& index) {
    std::vector<QueryTerm> terms;
    for (const auto& token : index.tokenizer().tokenize(query)) {
        auto plist = index.postings(token);
        if (!plist.empty()) terms.push_back(QueryTerm{plist});
    }
    return terms;
}

// Document numbers touched by any query term, ascending.
std::vector<std::uint32_t> candidate_docs(const std::vector<QueryTerm>& terms) {
    std::vector<std::uint32_t> docs;
    for (const auto& t : terms) {
        for (const auto& p : t.postings) docs.push_back(p.doc);
    }
    std::sort(docs.begin(), docs.end());
    docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
    return docs;
}

// Adds per-term contributions smallest first. Documents whose contributions are the same
// multiset (say, equal counts of two equally common terms) then get bit-identical scores
// and fall to the doc_id tie rule instead of rounding noise.
double sorted_sum(std::vector<double>& parts) {
    std::sort(parts.begin(), parts.end());
    double total = 0.0;
    for (const double p : parts) total += p;
    return total;
}

}  // namespace

Ranking score_bm25(std::string_view query, const InvertedIndex& index, double k1, double b,
                   std::size_t depth) {
    const auto terms = resolve_query(query, index);
    if (terms.empty()) return {};
    const std::size_t n = index.document_count();
    const double avgdl = index.average_doc_length();
    const auto docs = candidate_docs(terms);

    Ranking ranking;
    ranking.reserve(docs.size());
    std::vector<double> parts;
    for (const std::uint32_t doc : docs) {
        const double norm = 1.0 - b + b * static_cast<double>(index.doc_length(doc)) / avgdl;
        parts.clear();
        for (const auto& t : terms) {
            const std::uint32_t tf = InvertedIndex::tf_in(t.postings, doc);
            if (tf == 0) continue;
            const double f = static_cast<double>(tf);
            parts.push_back(bm25_idf(n, t.postings.size()) * (f * (k1 + 1.0)) / (f + k1 * norm));
        }
        ranking.push_back(ScoredDoc{index.doc_id(doc), sorted_sum(parts)});
    }
    order_and_truncate(ranking, depth);
    return ranking;
}

Ranking score_ql_dirichlet(std::string_view query, const InvertedIndex& index, double mu,
                           std::size_t depth) {
    const auto terms = resolve_query(query, index);
    if (terms.empty()) return {};
    const auto collection = static_cast<double>(index.collection_length());
    std::vector<double> background;
    background.reserve(terms.size());
    for (const auto& t : terms) {
        std::uint64_t ctf = 0;
        for (const auto& p : t.postings) ctf += p.tf;
        background.push_back(static_cast<double>(ctf) / collection);
    }
    const auto docs = candidate_docs(terms);

    Ranking ranking;
    ranking.reserve(docs.size());
    std::vector<double> parts(terms.size());
    for (const std::uint32_t doc : docs) {
        const double denom = static_cast<double>(index.doc_length(doc)) + mu;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const double tf = InvertedIndex::tf_in(terms[i].postings, doc);
            parts[i] = std::log((tf + mu * background[i]) / denom);
        }
        ranking.push_back(ScoredDoc{index.doc_id(doc), sorted_sum(parts)});
    }
    order_and_truncate(ranking, depth);
    return ranking;
}

void RetrievalSystem::validate() const {
    if (system_id.empty()) throw ConfigError("retrieval system with empty id");
    if (system_id.find_first_of(" \t\r\n") != std::string::npos) {
        throw ConfigError("system id '" + system_id + "' contains white space");
    }
    if (const auto* p = std::get_if<Bm25Params>(&kind)) {
        if (!(p->k1 >= 0.0)) throw ConfigError(system_id + ": k1 must be >= 0");
        if (!(p->b >= 0.0 && p->b <= 1.0)) throw ConfigError(system_id + ": b must lie in [0, 1]");
    } else if (const auto* q = std::get_if<QlDirichletParams>(&kind)) {
        if (!(q->mu > 0.0)) throw ConfigError(system_id + ": mu must be > 0");
    } else if (const auto* e = std::get_if<ExternalRunParams>(&kind)) {
        if (e->real_run.empty()) throw ConfigError(system_id + ": external system needs real_run");
    }
}

void to_json(json& j, const RetrievalSystem& s) {
    j = json{{"system_id", s.system_id}};
    if (const auto* p = std::get_if<Bm25Params>(&s.kind)) {
        j["kind"] = "bm25";
        j["k1"] = p->k1;
        j["b"] = p->b;
    } else if (const auto* q = std::get_if<QlDirichletParams>(&s.kind)) {
        j["kind"] = "ql_dirichlet";
        j["mu"] = q->mu;
    } else {
        const auto& e = std::get<ExternalRunParams>(s.kind);
        j["kind"] = "external";
        j["real_run"] = e.real_run.generic_string();
        if (!e.synthetic_run.empty()) j["synthetic_run"] = e.synthetic_run.generic_string();
    }
}

void from_json(const json& j, RetrievalSystem& s) {
    s.system_id = j.at("system_id").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "bm25") {
        s.kind = Bm25Params{j.value("k1", 0.9), j.value("b", 0.4)};
    } else if (kind == "ql_dirichlet") {
        s.kind = QlDirichletParams{j.value("mu", 1000.0)};
    } else if (kind == "external") {
        s.kind = ExternalRunParams{j.at("real_run").get<std::string>(),
                                   j.value("synthetic_run", std::string())};
    } else {
        throw ConfigError("unknown retrieval system kind '" + kind + "'");
    }
}

std::vector<RetrievalSystem> default_lexical_pool() {
    std::vector<RetrievalSystem> pool;
    for (const auto& [k1, b] : {std::pair{0.9, 0.4}, std::pair{1.2, 0.75}, std::pair{2.0, 0.75},
                               std::pair{1.2, 0.4}}) {
        pool.push_back(RetrievalSystem{fmt::format("bm25-k{:.1f}-b{}", k1, b), Bm25Params{k1, b}});
    }
    for (const double mu : {500.0, 1000.0, 2000.0}) {
        pool.push_back(RetrievalSystem{fmt::format("ql-mu{:.0f}", mu), QlDirichletParams{mu}});
    }
    return pool;
}

void validate_pool(const std::vector<RetrievalSystem>& pool) {
    std::set<std::string> ids;
    for (const auto& s : pool) {
        s.validate();
        if (!ids.insert(s.system_id).second) {
            throw ConfigError("duplicate system id '" + s.system_id + "'");
        }
    }
}

RunResult run_lexical_system(const RetrievalSystem& system, const InvertedIndex& index,
                             const std::map<std::string, std::string>& queries, std::size_t depth,
                             unsigned workers) {
    system.validate();
    if (!system.is_lexical()) {
        throw ConfigError(system.system_id + " is an external system; load its run file instead");
    }
    std::vector<std::pair<const std::string*, const std::string*>> items;
    for (const auto& [id, text] : queries) items.emplace_back(&id, &text);
    std::vector<Ranking> results(items.size());

    auto score_one = [&](std::size_t i) {
        const std::string& q = *items[i].second;
        if (const auto* p = std::get_if<Bm25Params>(&system.kind)) {
            results[i] = score_bm25(q, index, p->k1, p->b, depth);
        } else {
            results[i] = score_ql_dirichlet(q, index, std::get<QlDirichletParams>(system.kind).mu, depth);
        }
    };
    workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(items.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) score_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < items.size(); i = next++) score_one(i);
            });
        }
    }

    RunResult run;
    run.system_id = system.system_id;
    for (std::size_t i = 0; i < items.size(); ++i) run.rankings.emplace(*items[i].first, std::move(results[i]));
    return run;
}

void write_run(std::ostream& out, const RunResult& run) {
    for (const auto& [qid, ranking] : run.rankings) {
        for (std::size_t r = 0; r < ranking.size(); ++r) {
            out << fmt::format("{} Q0 {} {} {:.9f} {}\n", qid, ranking[r].doc_id, r + 1,
                               ranking[r].score, run.system_id);
        }
    }
}

RunResult parse_run(std::istream& in, std::size_t depth) {
    struct Last {
        long rank;
        double score;
    };
    RunResult run;
    std::map<std::string, Last> last;
    std::map<std::string, std::set<std::string>> seen;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        std::istringstream fields(line);
        std::vector<std::string> cols;
        for (std::string f; fields >> f;) cols.push_back(std::move(f));
        if (cols.empty()) continue;
        if (cols.size() != 6) {
            throw ValidationError(fmt::format("expected 6 columns, found {}", cols.size()), line_no);
        }
        long rank = 0;
        double score = 0.0;
        try {
            std::size_t used = 0;
            rank = std::stol(cols[3], &used);
            if (used != cols[3].size()) throw std::invalid_argument("rank");
            score = std::stod(cols[4], &used);
            if (used != cols[4].size() || !std::isfinite(score)) throw std::invalid_argument("score");
        } catch (const std::logic_error&) {
            throw ValidationError("rank or score is not numeric", line_no);
        }
        if (rank < 1) throw ValidationError("rank must be >= 1", line_no);
        if (run.system_id.empty()) {
            run.system_id = cols[5];
        } else if (cols[5] != run.system_id) {
            throw ValidationError(fmt::format("system tag '{}' differs from '{}'", cols[5],
                                              run.system_id),
                                  line_no);
        }
        const std::string& qid = cols[0];
        if (const auto it = last.find(qid); it != last.end()) {
            if (rank <= it->second.rank) {
                throw ValidationError(fmt::format("rank {} for query {} does not increase", rank, qid),
                                      line_no);
            }
            if (score > it->second.score) {
                throw ValidationError(
                    fmt::format("score for query {} increases at rank {}", qid, rank), line_no);
            }
        }
        if (!seen[qid].insert(cols[2]).second) {
            throw ValidationError(fmt::format("duplicate document {} for query {}", cols[2], qid),
                                  line_no);
        }
        last[qid] = Last{rank, score};
        auto& ranking = run.rankings[qid];
        if (ranking.size() < depth) ranking.push_back(ScoredDoc{cols[2], score});
    }
    return run;
}

RunResult read_run_file(const std::filesystem::path& path, std::size_t depth) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open run file " + path.string());
    return parse_run(in, depth);
}

ExternalRun load_external_run(std::istream& in, const std::set<std::string>& expected_queries,
                              std::size_t depth) {
    ExternalRun out;
    RunResult parsed = parse_run(in, depth);
    out.run.system_id = parsed.system_id;
    for (auto& [qid, ranking] : parsed.rankings) {
        if (expected_queries.count(qid) == 0) {
            out.ignored_queries.push_back(qid);
            continue;
        }
        out.run.rankings.emplace(qid, std::move(ranking));
    }
    for (const auto& qid : expected_queries) {
        if (out.run.rankings.count(qid) == 0) {
            out.missing_queries.push_back(qid);
            out.run.rankings.emplace(qid, Ranking{});
        }
    }
    if (!out.missing_queries.empty()) {
        spdlog::warn("[search] run {} has no results for {} of {} expected queries (first: {})",
                     out.run.system_id, out.missing_queries.size(), expected_queries.size(),
                     out.missing_queries.front());
    }
    return out;
}

ExternalRun load_external_run(const std::filesystem::path& path,
                              const std::set<std::string>& expected_queries, std::size_t depth) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open run file " + path.string());
    return load_external_run(in, expected_queries, depth);
}

}  // namespace totsim
