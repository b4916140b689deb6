#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "totsim/index.hpp"

namespace totsim {

inline constexpr std::size_t kRetrievalDepth = 1000;

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Ranked list, best first.
using Ranking = std::vector<ScoredDoc>;

/// Descending score, ascending doc_id on ties; keeps the first `depth` entries.
void order_and_truncate(Ranking& ranking, std::size_t depth);

/// ln((N - df + 0.5) / (df + 0.5) + 1)
[[nodiscard]] double bm25_idf(std::size_t n_docs, std::size_t df);

/// Okapi BM25 over documents sharing at least one query token. Repeated query tokens
/// contribute once per occurrence.
[[nodiscard]] Ranking score_bm25(std::string_view query, const InvertedIndex& index, double k1,
                                 double b, std::size_t depth = kRetrievalDepth);

/// Query likelihood with Dirichlet smoothing; out-of-vocabulary query tokens are dropped.
[[nodiscard]] Ranking score_ql_dirichlet(std::string_view query, const InvertedIndex& index,
                                         double mu, std::size_t depth = kRetrievalDepth);

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct QlDirichletParams {
    double mu = 1000.0;
    friend bool operator==(const QlDirichletParams&, const QlDirichletParams&) = default;
};

/// A system whose output is read from run files. `synthetic_run` may contain a
/// "{variation}" placeholder; an empty value reuses `real_run`.
struct ExternalRunParams {
    std::filesystem::path real_run;
    std::filesystem::path synthetic_run;
    friend bool operator==(const ExternalRunParams&, const ExternalRunParams&) = default;
};

struct RetrievalSystem {
    std::string system_id;
    std::variant<Bm25Params, QlDirichletParams, ExternalRunParams> kind;

    [[nodiscard]] bool is_lexical() const noexcept {
        return !std::holds_alternative<ExternalRunParams>(kind);
    }
    /// Throws ConfigError for k1 < 0, b outside [0,1] or mu <= 0.
    void validate() const;

    friend bool operator==(const RetrievalSystem&, const RetrievalSystem&) = default;
};

void to_json(nlohmann::json& j, const RetrievalSystem& s);
void from_json(const nlohmann::json& j, RetrievalSystem& s);

/// Four BM25 settings and three Dirichlet priors.
[[nodiscard]] std::vector<RetrievalSystem> default_lexical_pool();

/// Throws ConfigError on duplicate system ids or invalid parameters.
void validate_pool(const std::vector<RetrievalSystem>& pool);

struct RunResult {
    std::string system_id;
    std::map<std::string, Ranking> rankings;  ///< by query_id

    friend bool operator==(const RunResult&, const RunResult&) = default;
};

/// Score every query with a lexical system. Queries are independent and may be scored on
/// `workers` threads; the result is keyed by query_id and does not depend on scheduling.
[[nodiscard]] RunResult run_lexical_system(const RetrievalSystem& system, const InvertedIndex& index,
                                           const std::map<std::string, std::string>& queries,
                                           std::size_t depth = kRetrievalDepth,
                                           unsigned workers = 1);

/// "query_id Q0 doc_id rank score system_id" lines, queries in id order.
void write_run(std::ostream& out, const RunResult& run);

/// Parse and validate a six-column run: ranks strictly increasing and scores
/// non-increasing per query in file order, no repeated (query, doc) pair, one system tag.
/// Each query is truncated to `depth`.
[[nodiscard]] RunResult parse_run(std::istream& in, std::size_t depth = kRetrievalDepth);
[[nodiscard]] RunResult read_run_file(const std::filesystem::path& path,
                                      std::size_t depth = kRetrievalDepth);

struct ExternalRun {
    RunResult run;
    std::vector<std::string> missing_queries;  ///< expected but absent; recorded as empty
    std::vector<std::string> ignored_queries;  ///< present but not expected; dropped
};

[[nodiscard]] ExternalRun load_external_run(const std::filesystem::path& path,
                                            const std::set<std::string>& expected_queries,
                                            std::size_t depth = kRetrievalDepth);
[[nodiscard]] ExternalRun load_external_run(std::istream& in,
                                            const std::set<std::string>& expected_queries,
                                            std::size_t depth = kRetrievalDepth);

}  // namespace totsim
