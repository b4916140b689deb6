#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "totsim/corpus.hpp"
#include "totsim/retrieval.hpp"
#include "totsim/variation.hpp"

namespace totsim {

/// Known-item judgments: each query has exactly one relevant document.
class Qrels {
public:
    Qrels() = default;
    explicit Qrels(std::map<std::string, std::string> relevant);

    /// "query_id 0 doc_id rel" lines. Lines with rel 0 are ignored; a second relevant
    /// document for a query is an error.
    static Qrels parse(std::istream& in);
    static Qrels load(const std::filesystem::path& path);
    void write(std::ostream& out) const;

    [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return relevant_; }
    [[nodiscard]] std::size_t size() const noexcept { return relevant_.size(); }
    [[nodiscard]] bool contains(std::string_view query_id) const;
    [[nodiscard]] const std::string& relevant(std::string_view query_id) const;

    void add(std::string query_id, std::string doc_id);

private:
    std::map<std::string, std::string> relevant_;
};

enum class Metric { Ndcg100, Ndcg1000, Mrr };

inline constexpr std::array<Metric, 3> kBaseMetrics = {Metric::Ndcg100, Metric::Ndcg1000,
                                                       Metric::Mrr};

[[nodiscard]] std::string_view to_string(Metric m);
/// Accepts "ndcg_100", "ndcg_1000", "mrr". Throws EvaluationError otherwise.
[[nodiscard]] Metric parse_metric(std::string_view name);

/// 1-based position of doc_id in the ranking, if present.
[[nodiscard]] std::optional<std::size_t> rank_of(std::span<const ScoredDoc> ranking,
                                                 std::string_view doc_id);

/// Binary single-relevant NDCG: 1/log2(rank+1) when the document is within the top k.
[[nodiscard]] double ndcg_at_k(std::span<const ScoredDoc> ranking, std::string_view relevant,
                               std::size_t k);
[[nodiscard]] double reciprocal_rank(std::span<const ScoredDoc> ranking, std::string_view relevant,
                                     std::size_t depth);

/// Mean reciprocal rank over the qrels queries; queries missing from `rankings` count 0.
[[nodiscard]] double mrr(const std::map<std::string, Ranking>& rankings, const Qrels& qrels,
                         std::size_t depth = kRetrievalDepth);

struct MetricReport {
    std::string system_id;
    double ndcg_100 = 0.0;
    double ndcg_1000 = 0.0;
    double mrr = 0.0;
    std::size_t query_count = 0;

    [[nodiscard]] double value(Metric m) const;
    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct QueryMetadata {
    Partition partition = Partition::Full;
    DomainLabel domain = DomainLabel::General;
};

/// Restricts evaluation to queries whose metadata matches every set field.
struct QueryFilter {
    std::optional<Partition> partition;
    std::optional<DomainLabel> domain;

    [[nodiscard]] bool matches(const QueryMetadata& meta) const;
    [[nodiscard]] bool empty() const noexcept { return !partition && !domain; }
};

using QueryMetadataMap = std::map<std::string, QueryMetadata>;

/// One report per run. Metrics are means over the selected qrels queries, summed in
/// query_id order. A run naming a query outside the qrels is an error; with a filter,
/// every selected query needs metadata.
[[nodiscard]] std::vector<MetricReport> evaluate_pool(const std::vector<RunResult>& runs,
                                                      const Qrels& qrels,
                                                      const QueryMetadataMap* metadata = nullptr,
                                                      const QueryFilter& filter = {});

/// Tab-separated table with a header row, values to 4 decimals.
void write_report_table(std::ostream& out, const std::vector<MetricReport>& reports);
/// One JSON object per line with full precision.
void write_report_jsonl(std::ostream& out, const std::vector<MetricReport>& reports);
[[nodiscard]] std::vector<MetricReport> read_report_jsonl(std::istream& in);

struct SystemRanking {
    Metric metric = Metric::Ndcg100;
    std::vector<std::string> system_ids;  ///< best first
    std::vector<double> scores;           ///< aligned with system_ids

    [[nodiscard]] std::size_t size() const noexcept { return system_ids.size(); }
};

/// Descending by metric, ties by ascending system_id.
[[nodiscard]] SystemRanking rank_systems(const std::vector<MetricReport>& reports, Metric metric);
[[nodiscard]] SystemRanking rank_systems(const std::vector<MetricReport>& reports,
                                         std::string_view metric_name);

/// Kendall's tau-b between the score vectors of two rankings, aligned by system_id.
/// O(n log n) (Knight's algorithm).
[[nodiscard]] double kendall_tau(const SystemRanking& a, const SystemRanking& b);
[[nodiscard]] double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Product-moment correlation. Throws CorrelationError on a length mismatch, n < 2 or a
/// constant vector (distinct messages).
[[nodiscard]] double pearson_r(std::span<const double> x, std::span<const double> y);

struct MetricCorrelation {
    double tau = 0.0;
    double pearson = 0.0;
};

struct CorrelationResult {
    std::array<MetricCorrelation, 3> per_metric{};  ///< indexed like kBaseMetrics
    double mean_tau = 0.0;
    double mean_pearson = 0.0;

    [[nodiscard]] const MetricCorrelation& at(Metric m) const;

    /// Fills the means from the three per-metric values.
    static CorrelationResult from_per_metric(const std::array<MetricCorrelation, 3>& values);
};

/// Per metric: tau between system rankings, r between score vectors (aligned by id).
/// Throws CorrelationError naming the systems present on only one side.
[[nodiscard]] CorrelationResult correlate(const std::vector<MetricReport>& real_reports,
                                          const std::vector<MetricReport>& syn_reports);

using StrategyKey = std::pair<Partition, VariationId>;

/// Per partition, the variation with the highest mean tau; ties go to the lower id.
/// Throws EvaluationError when `results` is empty.
[[nodiscard]] std::map<Partition, VariationId> select_best_strategy(
    const std::map<StrategyKey, CorrelationResult>& results);

struct CorrelationRow {
    Partition partition = Partition::Full;
    VariationId variation = VariationId::V1;
    CorrelationResult result;
};

/// Table layout: configuration columns, then tau and r per metric, then the means.
/// `target_language` labels the non-English prompt/wiki columns.
void write_correlation_table(std::ostream& out, std::string_view target_language,
                             const std::vector<CorrelationRow>& rows);
void write_correlation_jsonl(std::ostream& out, const std::vector<CorrelationRow>& rows);
[[nodiscard]] std::vector<CorrelationRow> read_correlation_jsonl(std::istream& in);

}  // namespace totsim
