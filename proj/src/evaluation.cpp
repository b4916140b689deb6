#include "totsim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "totsim/error.hpp"

namespace totsim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Qrels

Qrels::Qrels(std::map<std::string, std::string> relevant) : relevant_(std::move(relevant)) {}

Qrels Qrels::parse(std::istream& in) {
    Qrels q;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        std::istringstream fields(line);
        std::vector<std::string> cols;
        for (std::string f; fields >> f;) cols.push_back(std::move(f));
        if (cols.empty()) continue;
        if (cols.size() != 4) throw ValidationError("qrels line needs 4 columns", line_no);
        int rel = 0;
        try {
            rel = std::stoi(cols[3]);
        } catch (const std::logic_error&) {
            throw ValidationError("relevance is not an integer", line_no);
        }
        if (rel <= 0) continue;
        if (q.relevant_.count(cols[0]) != 0) {
            throw ValidationError("query " + cols[0] + " has more than one relevant document",
                                  line_no);
        }
        q.relevant_.emplace(cols[0], cols[2]);
    }
    return q;
}

Qrels Qrels::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open qrels " + path.string());
    return parse(in);
}

void Qrels::write(std::ostream& out) const {
    for (const auto& [qid, doc] : relevant_) out << qid << " 0 " << doc << " 1\n";
}

bool Qrels::contains(std::string_view query_id) const {
    return relevant_.count(std::string(query_id)) != 0;
}

const std::string& Qrels::relevant(std::string_view query_id) const {
    const auto it = relevant_.find(std::string(query_id));
    if (it == relevant_.end()) throw EvaluationError("no judgment for query " + std::string(query_id));
    return it->second;
}

void Qrels::add(std::string query_id, std::string doc_id) {
    if (!relevant_.emplace(query_id, std::move(doc_id)).second) {
        throw EvaluationError("query " + query_id + " already has a relevant document");
    }
}

// ---------------------------------------------------------------------------
// Metrics

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Ndcg100: return "ndcg_100";
        case Metric::Ndcg1000: return "ndcg_1000";
        case Metric::Mrr: return "mrr";
    }
    return "?";
}

Metric parse_metric(std::string_view name) {
    for (const Metric m : kBaseMetrics) {
        if (to_string(m) == name) return m;
    }
    throw EvaluationError("unknown metric '" + std::string(name) + "'");
}

std::optional<std::size_t> rank_of(std::span<const ScoredDoc> ranking, std::string_view doc_id) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (ranking[i].doc_id == doc_id) return i + 1;
    }
    return std::nullopt;
}

double ndcg_at_k(std::span<const ScoredDoc> ranking, std::string_view relevant, std::size_t k) {
    if (k == 0) throw EvaluationError("ndcg cutoff must be >= 1");
    const auto rank = rank_of(ranking.first(std::min(k, ranking.size())), relevant);
    if (!rank) return 0.0;
    return 1.0 / std::log2(static_cast<double>(*rank) + 1.0);
}

double reciprocal_rank(std::span<const ScoredDoc> ranking, std::string_view relevant,
                       std::size_t depth) {
    if (depth == 0) throw EvaluationError("mrr depth must be >= 1");
    const auto rank = rank_of(ranking.first(std::min(depth, ranking.size())), relevant);
    return rank ? 1.0 / static_cast<double>(*rank) : 0.0;
}

double mrr(const std::map<std::string, Ranking>& rankings, const Qrels& qrels, std::size_t depth) {
    if (depth == 0) throw EvaluationError("mrr depth must be >= 1");
    if (qrels.size() == 0) return 0.0;
    double sum = 0.0;
    for (const auto& [qid, doc] : qrels.entries()) {
        const auto it = rankings.find(qid);
        if (it != rankings.end()) sum += reciprocal_rank(it->second, doc, depth);
    }
    return sum / static_cast<double>(qrels.size());
}

double MetricReport::value(Metric m) const {
    switch (m) {
        case Metric::Ndcg100: return ndcg_100;
        case Metric::Ndcg1000: return ndcg_1000;
        case Metric::Mrr: return mrr;
    }
    return 0.0;
}

bool QueryFilter::matches(const QueryMetadata& meta) const {
    if (partition && *partition != meta.partition) return false;
    if (domain && *domain != meta.domain) return false;
    return true;
}

std::vector<MetricReport> evaluate_pool(const std::vector<RunResult>& runs, const Qrels& qrels,
                                        const QueryMetadataMap* metadata,
                                        const QueryFilter& filter) {
    std::vector<std::pair<const std::string*, const std::string*>> selected;
    for (const auto& [qid, doc] : qrels.entries()) {
        if (!filter.empty()) {
            if (metadata == nullptr) throw EvaluationError("query filter given without metadata");
            const auto it = metadata->find(qid);
            if (it == metadata->end()) throw EvaluationError("no metadata for query " + qid);
            if (!filter.matches(it->second)) continue;
        }
        selected.emplace_back(&qid, &doc);
    }

    std::vector<MetricReport> reports;
    reports.reserve(runs.size());
    for (const auto& run : runs) {
        for (const auto& [qid, ranking] : run.rankings) {
            if (!qrels.contains(qid)) {
                throw EvaluationError(fmt::format("run {} references unknown query {}",
                                                  run.system_id, qid));
            }
        }
        MetricReport report;
        report.system_id = run.system_id;
        report.query_count = selected.size();
        for (const auto& [qid, doc] : selected) {
            const auto it = run.rankings.find(*qid);
            if (it == run.rankings.end()) continue;
            report.ndcg_100 += ndcg_at_k(it->second, *doc, 100);
            report.ndcg_1000 += ndcg_at_k(it->second, *doc, 1000);
            report.mrr += reciprocal_rank(it->second, *doc, kRetrievalDepth);
        }
        if (!selected.empty()) {
            const auto n = static_cast<double>(selected.size());
            report.ndcg_100 /= n;
            report.ndcg_1000 /= n;
            report.mrr /= n;
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

void write_report_table(std::ostream& out, const std::vector<MetricReport>& reports) {
    out << "system_id\tndcg_100\tndcg_1000\tmrr\tqueries\n";
    for (const auto& r : reports) {
        out << fmt::format("{}\t{:.4f}\t{:.4f}\t{:.4f}\t{}\n", r.system_id, r.ndcg_100,
                           r.ndcg_1000, r.mrr, r.query_count);
    }
}

void write_report_jsonl(std::ostream& out, const std::vector<MetricReport>& reports) {
    for (const auto& r : reports) {
        out << json{{"system_id", r.system_id},
                    {"ndcg_100", r.ndcg_100},
                    {"ndcg_1000", r.ndcg_1000},
                    {"mrr", r.mrr},
                    {"query_count", r.query_count}}
                   .dump()
            << '\n';
    }
}

std::vector<MetricReport> read_report_jsonl(std::istream& in) {
    std::vector<MetricReport> reports;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            reports.push_back(MetricReport{j.at("system_id").get<std::string>(),
                                           j.at("ndcg_100").get<double>(),
                                           j.at("ndcg_1000").get<double>(), j.at("mrr").get<double>(),
                                           j.value("query_count", std::size_t{0})});
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad report record: ") + e.what(), line_no);
        }
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Rankings and correlation

SystemRanking rank_systems(const std::vector<MetricReport>& reports, Metric metric) {
    if (reports.empty()) throw EvaluationError("rank_systems: no reports");
    std::vector<const MetricReport*> order;
    for (const auto& r : reports) order.push_back(&r);
    std::sort(order.begin(), order.end(), [metric](const MetricReport* a, const MetricReport* b) {
        const double va = a->value(metric);
        const double vb = b->value(metric);
        if (va != vb) return va > vb;
        return a->system_id < b->system_id;
    });
    SystemRanking ranking;
    ranking.metric = metric;
    for (const auto* r : order) {
        ranking.system_ids.push_back(r->system_id);
        ranking.scores.push_back(r->value(metric));
    }
    return ranking;
}

SystemRanking rank_systems(const std::vector<MetricReport>& reports, std::string_view metric_name) {
    return rank_systems(reports, parse_metric(metric_name));
}

namespace {

// Inversions of v (pairs i < j with v[i] > v[j]), sorting v ascending as a side effect.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch,
                               std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t swaps = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += mid - i;
            scratch[k++] = v[j++];
        } else {
            scratch[k++] = v[i++];
        }
    }
    while (i < mid) scratch[k++] = v[i++];
    while (j < hi) scratch[k++] = v[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

std::uint64_t tied_pairs(std::uint64_t run) { return run * (run - 1) / 2; }

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw CorrelationError("kendall_tau: vectors differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw CorrelationError("kendall_tau: needs at least two systems");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    std::uint64_t x_ties = 0;
    std::uint64_t joint_ties = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && x[idx[j]] == x[idx[i]]) ++j;
        x_ties += tied_pairs(j - i);
        for (std::size_t a = i; a < j;) {
            std::size_t b = a + 1;
            while (b < j && y[idx[b]] == y[idx[a]]) ++b;
            joint_ties += tied_pairs(b - a);
            a = b;
        }
        i = j;
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
    std::vector<double> scratch(n);
    const std::uint64_t swaps = count_inversions(ys, scratch, 0, n);

    std::uint64_t y_ties = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && ys[j] == ys[i]) ++j;
        y_ties += tied_pairs(j - i);
        i = j;
    }

    const auto n0 = static_cast<double>(tied_pairs(n));
    const double denom = std::sqrt((n0 - static_cast<double>(x_ties)) * (n0 - static_cast<double>(y_ties)));
    if (denom == 0.0) throw CorrelationError("kendall_tau: undefined for a constant score vector");
    const double numer = n0 - static_cast<double>(x_ties) - static_cast<double>(y_ties) +
                         static_cast<double>(joint_ties) - 2.0 * static_cast<double>(swaps);
    return std::clamp(numer / denom, -1.0, 1.0);
}

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

// Systems present on one side only; empty string when the pools agree.
std::string pool_mismatch(const std::vector<std::string>& left, const std::vector<std::string>& right,
                          std::string_view left_name, std::string_view right_name) {
    const std::set<std::string> l(left.begin(), left.end());
    const std::set<std::string> r(right.begin(), right.end());
    std::vector<std::string> only_left, only_right;
    std::set_difference(l.begin(), l.end(), r.begin(), r.end(), std::back_inserter(only_left));
    std::set_difference(r.begin(), r.end(), l.begin(), l.end(), std::back_inserter(only_right));
    std::string msg;
    if (!only_left.empty()) msg += fmt::format("missing from {}: {}", right_name, join(only_left));
    if (!only_right.empty()) {
        if (!msg.empty()) msg += "; ";
        msg += fmt::format("missing from {}: {}", left_name, join(only_right));
    }
    return msg;
}

}  // namespace

double kendall_tau(const SystemRanking& a, const SystemRanking& b) {
    if (const auto msg = pool_mismatch(a.system_ids, b.system_ids, "first ranking", "second ranking");
        !msg.empty()) {
        throw CorrelationError("kendall_tau: system sets differ (" + msg + ")");
    }
    if (a.size() != b.size()) throw CorrelationError("kendall_tau: repeated system ids");
    std::map<std::string_view, double> b_scores;
    for (std::size_t i = 0; i < b.size(); ++i) b_scores.emplace(b.system_ids[i], b.scores[i]);
    std::vector<double> x(a.scores.begin(), a.scores.end());
    std::vector<double> y;
    y.reserve(a.size());
    for (const auto& id : a.system_ids) y.push_back(b_scores.at(id));
    return kendall_tau_b(x, y);
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw CorrelationError("pearson_r: vectors differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw CorrelationError("pearson_r: needs at least two values");
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
    };
    if (constant(x) || constant(y)) {
        throw CorrelationError("pearson_r: undefined for a constant score vector");
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

const MetricCorrelation& CorrelationResult::at(Metric m) const {
    return per_metric[static_cast<std::size_t>(m)];
}

CorrelationResult CorrelationResult::from_per_metric(const std::array<MetricCorrelation, 3>& values) {
    CorrelationResult r;
    r.per_metric = values;
    r.mean_tau = (values[0].tau + values[1].tau + values[2].tau) / 3.0;
    r.mean_pearson = (values[0].pearson + values[1].pearson + values[2].pearson) / 3.0;
    return r;
}

CorrelationResult correlate(const std::vector<MetricReport>& real_reports,
                            const std::vector<MetricReport>& syn_reports) {
    std::vector<std::string> real_ids, syn_ids;
    for (const auto& r : real_reports) real_ids.push_back(r.system_id);
    for (const auto& r : syn_reports) syn_ids.push_back(r.system_id);
    if (const auto msg = pool_mismatch(real_ids, syn_ids, "real-query reports", "synthetic-query reports");
        !msg.empty()) {
        throw CorrelationError("system pools differ (" + msg + ")");
    }

    std::map<std::string_view, const MetricReport*> syn_by_id;
    for (const auto& r : syn_reports) syn_by_id.emplace(r.system_id, &r);

    std::array<MetricCorrelation, 3> values{};
    for (std::size_t m = 0; m < kBaseMetrics.size(); ++m) {
        const Metric metric = kBaseMetrics[m];
        values[m].tau = kendall_tau(rank_systems(real_reports, metric), rank_systems(syn_reports, metric));
        std::vector<double> x, y;
        for (const auto& r : real_reports) {
            x.push_back(r.value(metric));
            y.push_back(syn_by_id.at(r.system_id)->value(metric));
        }
        values[m].pearson = pearson_r(x, y);
    }
    return CorrelationResult::from_per_metric(values);
}

std::map<Partition, VariationId> select_best_strategy(
    const std::map<StrategyKey, CorrelationResult>& results) {
    if (results.empty()) throw EvaluationError("select_best_strategy: no correlation results");
    std::map<Partition, std::pair<VariationId, double>> best;
    // The map iterates variations in ascending id within a partition, so a strict
    // comparison keeps the lowest id on ties.
    for (const auto& [key, result] : results) {
        const auto [partition, variation] = key;
        const auto it = best.find(partition);
        if (it == best.end() || result.mean_tau > it->second.second) {
            best[partition] = {variation, result.mean_tau};
        }
    }
    std::map<Partition, VariationId> out;
    for (const auto& [p, choice] : best) out.emplace(p, choice.first);
    return out;
}

// ---------------------------------------------------------------------------
// Correlation tables

void write_correlation_table(std::ostream& out, std::string_view target_language,
                             const std::vector<CorrelationRow>& rows) {
    out << "id\tpartition\tprompt\twiki\tndcg_100_tau\tndcg_100_r\tndcg_1000_tau\tndcg_1000_r\t"
           "mrr_tau\tmrr_r\tmean_tau\tmean_r\n";
    auto lang = [&](SourceLanguage s, bool translated) {
        if (s == SourceLanguage::English) return std::string("English");
        return translated ? fmt::format("{} (Trans)", target_language) : std::string(target_language);
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const auto v = PromptVariation::of(row.variation);
        out << fmt::format("{}\t{}\t{}\t{}", i + 1, to_string(row.partition),
                           lang(v.prompt_language, true), lang(v.wiki_language, false));
        for (const auto& mc : row.result.per_metric) out << fmt::format("\t{:.4f}\t{:.4f}", mc.tau, mc.pearson);
        out << fmt::format("\t{:.4f}\t{:.4f}\n", row.result.mean_tau, row.result.mean_pearson);
    }
}

void write_correlation_jsonl(std::ostream& out, const std::vector<CorrelationRow>& rows) {
    for (const auto& row : rows) {
        json j{{"partition", to_string(row.partition)},
               {"variation", to_string(row.variation)},
               {"mean_tau", row.result.mean_tau},
               {"mean_pearson", row.result.mean_pearson}};
        for (std::size_t m = 0; m < kBaseMetrics.size(); ++m) {
            j[std::string(to_string(kBaseMetrics[m]))] = {{"tau", row.result.per_metric[m].tau},
                                                          {"pearson", row.result.per_metric[m].pearson}};
        }
        out << j.dump() << '\n';
    }
}

std::vector<CorrelationRow> read_correlation_jsonl(std::istream& in) {
    std::vector<CorrelationRow> rows;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            CorrelationRow row;
            row.partition = parse_partition(j.at("partition").get<std::string>());
            row.variation = parse_variation(j.at("variation").get<std::string>());
            std::array<MetricCorrelation, 3> values{};
            for (std::size_t m = 0; m < kBaseMetrics.size(); ++m) {
                const auto& mj = j.at(std::string(to_string(kBaseMetrics[m])));
                values[m] = {mj.at("tau").get<double>(), mj.at("pearson").get<double>()};
            }
            row.result = CorrelationResult::from_per_metric(values);
            rows.push_back(row);
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad correlation record: ") + e.what(), line_no);
        } catch (const Error& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return rows;
}

}  // namespace totsim
