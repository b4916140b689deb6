#include "totsim/collection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "totsim/error.hpp"
#include "totsim/evaluation.hpp"
#include "totsim/io.hpp"
#include "totsim/rng.hpp"
#include "totsim/sampling.hpp"
#include "totsim/text.hpp"

namespace totsim {

using nlohmann::json;

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "test") return Split::Test;
    throw Error("unknown split '" + std::string(s) + "'");
}

void CollectionSpec::validate() const {
    const double split_sum = split_ratio[0] + split_ratio[1] + split_ratio[2];
    if (std::any_of(split_ratio.begin(), split_ratio.end(), [](double r) { return r < 0.0; }) ||
        std::abs(split_sum - 1.0) > 1e-9) {
        throw ConfigError(fmt::format("split ratio must be non-negative and sum to 1 (got {})", split_sum));
    }
    double domain_sum = 0.0;
    for (const auto& [d, r] : domain_ratio) {
        if (r < 0.0) throw ConfigError("negative domain ratio");
        domain_sum += r;
    }
    if (std::abs(domain_sum - 1.0) > 1e-9) {
        throw ConfigError(fmt::format("domain ratio must sum to 1 (got {})", domain_sum));
    }
    if (language.empty()) throw ConfigError("collection language is empty");
}

std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratio,
                                        std::array<double, 3>* carry) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double ideal = static_cast<double>(n) * ratio[i];
        // Guard against 0.1 * 10 landing just under 1.
        const double fl = std::floor(ideal + 1e-9);
        counts[i] = static_cast<std::size_t>(fl);
        frac[i] = ideal - fl;
        assigned += counts[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    const std::array<double, 3> owed = carry ? *carry : std::array<double, 3>{};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (std::abs(frac[a] - frac[b]) > 1e-9) return frac[a] > frac[b];
        return owed[a] > owed[b] + 1e-9;
    });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
    if (carry) {
        for (std::size_t i = 0; i < 3; ++i) {
            (*carry)[i] += static_cast<double>(n) * ratio[i] - static_cast<double>(counts[i]);
        }
    }
    return counts;
}

namespace {

json counts_json(const std::map<std::string, std::size_t>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[k] = v;
    return j;
}

std::string cell_label(Partition p, DomainLabel d) {
    return fmt::format("{}/{}", to_string(p), to_string(d));
}

}  // namespace

CollectionBundle assemble_collection(const std::vector<QueryRecord>& records, const CollectionSpec& spec,
                                     const Corpus& corpus, const std::string& config_hash) {
    spec.validate();
    std::vector<const QueryRecord*> accepted;
    std::vector<std::string> discarded;
    std::set<std::string> seen;
    std::set<std::string> fingerprints;
    for (const auto& r : records) {
        if (!seen.insert(r.query_id).second) throw ValidationError("duplicate query_id " + r.query_id);
        if (r.language != spec.language) {
            throw ValidationError(fmt::format("query {} is {} but the collection is {}", r.query_id,
                                              r.language, spec.language));
        }
        if (corpus.find(r.doc_id) == nullptr) {
            throw ValidationError(fmt::format("query {} references doc {} which is not in the corpus",
                                              r.query_id, r.doc_id));
        }
        if (r.discarded) {
            discarded.push_back(r.query_id);
            continue;
        }
        const auto it = spec.strategy_map.find(r.partition);
        if (it == spec.strategy_map.end()) {
            throw ValidationError(fmt::format("no strategy selected for partition {} (query {})",
                                              to_string(r.partition), r.query_id));
        }
        if (it->second != r.variation) {
            throw ValidationError(fmt::format("query {} was generated with {} but {} is selected for {}",
                                              r.query_id, to_string(r.variation), to_string(it->second),
                                              to_string(r.partition)));
        }
        fingerprints.insert(r.provider_fingerprint);
        accepted.push_back(&r);
    }
    if (spec.query_count != 0 && records.size() != spec.query_count) {
        spdlog::warn("[assemble] expected {} candidates, manifest has {}", spec.query_count, records.size());
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const QueryRecord* a, const QueryRecord* b) { return a->query_id < b->query_id; });
    std::sort(discarded.begin(), discarded.end());

    // Stratified split: shuffle each (partition, domain) cell with its own stream.
    std::map<std::pair<Partition, DomainLabel>, std::vector<std::string>> cells;
    for (const auto* r : accepted) cells[{r->partition, r->domain}].push_back(r->query_id);
    std::map<std::string, Split> split_of;
    std::array<double, 3> carry{};
    for (auto& [cell, ids] : cells) {
        auto rng = Rng::derive(spec.seed, "split/" + cell_label(cell.first, cell.second));
        for (std::size_t i = ids.size(); i > 1; --i) {
            std::swap(ids[i - 1], ids[rng.uniform_below(i)]);
        }
        const auto counts = split_counts(ids.size(), spec.split_ratio, &carry);
        std::size_t pos = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t k = 0; k < counts[s]; ++k) split_of[ids[pos++]] = static_cast<Split>(s);
        }
    }

    CollectionBundle bundle;
    bundle.language = spec.language;
    std::map<std::string, std::size_t> by_partition;
    std::map<std::string, std::size_t> by_domain;
    std::map<std::string, std::size_t> by_split;
    std::map<std::string, std::size_t> by_cell;
    for (const auto* r : accepted) {
        bundle.queries.emplace_back(r->query_id, text::single_line(r->text));
        bundle.qrels.emplace_back(r->query_id, r->doc_id);
        const Split s = split_of.at(r->query_id);
        bundle.splits.emplace_back(r->query_id, s);
        bundle.metadata.push_back(CollectionQuery{r->query_id, {}, r->doc_id, r->partition, r->domain, r->variation});
        ++by_partition[std::string(to_string(r->partition))];
        ++by_domain[std::string(to_string(r->domain))];
        ++by_split[std::string(to_string(s))];
        ++by_cell[cell_label(r->partition, r->domain)];
    }

    json strategy = json::object();
    for (const auto& [p, v] : spec.strategy_map) strategy[std::string(to_string(p))] = to_string(v);
    json domain_ratio = json::object();
    for (const auto& [d, r] : spec.domain_ratio) domain_ratio[std::string(to_string(d))] = r;

    bundle.manifest = json{
        {"schema_version", kCollectionSchemaVersion},
        {"language", spec.language},
        {"config_hash", config_hash},
        {"seed", spec.seed},
        {"rng", Rng::algorithm},
        {"split_ratio", {{"train", spec.split_ratio[0]}, {"dev", spec.split_ratio[1]}, {"test", spec.split_ratio[2]}}},
        {"domain_ratio", domain_ratio},
        {"strategy_map", strategy},
        {"provider_fingerprints", std::vector<std::string>(fingerprints.begin(), fingerprints.end())},
        {"counts",
         {{"queries", accepted.size()},
          {"discarded", discarded.size()},
          {"by_partition", counts_json(by_partition)},
          {"by_domain", counts_json(by_domain)},
          {"by_split", counts_json(by_split)},
          {"by_cell", counts_json(by_cell)}}},
        {"corpus_size", corpus.size()},
        {"discarded", discarded},
    };
    return bundle;
}

void write_collection(const CollectionBundle& bundle, const std::filesystem::path& dir) {
    std::ostringstream queries;
    for (const auto& [id, txt] : bundle.queries) queries << id << '\t' << text::single_line(txt) << '\n';
    Qrels qrels;
    for (const auto& [id, doc] : bundle.qrels) qrels.add(id, doc);
    std::ostringstream qrels_out;
    qrels.write(qrels_out);
    std::ostringstream splits;
    for (const auto& [id, s] : bundle.splits) splits << id << '\t' << to_string(s) << '\n';
    std::ostringstream meta;
    for (const auto& m : bundle.metadata) {
        meta << json{{"query_id", m.query_id},
                     {"doc_id", m.doc_id},
                     {"partition", to_string(m.partition)},
                     {"domain", to_string(m.domain)},
                     {"variation", to_string(m.variation)}}
                    .dump()
             << '\n';
    }
    atomic_write_file(dir / "queries.tsv", queries.str());
    atomic_write_file(dir / "qrels.txt", qrels_out.str());
    atomic_write_file(dir / "splits.tsv", splits.str());
    atomic_write_file(dir / "metadata.jsonl", meta.str());
    // Manifest last: its presence marks a complete bundle.
    atomic_write_file(dir / "manifest.json", bundle.manifest.dump(2) + "\n");
}

namespace {

std::vector<std::pair<std::string, std::string>> read_two_columns(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(path.filename().string() + ": expected two tab-separated columns", line_no);
        }
        rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return rows;
}

}  // namespace

CollectionBundle load_collection(const std::filesystem::path& dir) {
    CollectionBundle bundle;
    bundle.manifest = json::parse(read_file(dir / "manifest.json"));
    bundle.language = bundle.manifest.at("language").get<std::string>();
    bundle.queries = read_two_columns(dir / "queries.tsv");
    for (const auto& [id, s] : read_two_columns(dir / "splits.tsv")) bundle.splits.emplace_back(id, parse_split(s));
    {
        std::istringstream in(read_file(dir / "qrels.txt"));
        std::string line;
        for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
            std::istringstream row(line);
            std::string qid, zero, doc;
            int rel = 0;
            if (line.empty()) continue;
            if (!(row >> qid >> zero >> doc >> rel)) throw ParseError("qrels.txt: malformed line", line_no);
            if (rel > 0) bundle.qrels.emplace_back(qid, doc);
        }
    }
    {
        std::istringstream in(read_file(dir / "metadata.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            bundle.metadata.push_back(CollectionQuery{
                j.at("query_id").get<std::string>(), {}, j.at("doc_id").get<std::string>(),
                parse_partition(j.at("partition").get<std::string>()),
                parse_domain(j.at("domain").get<std::string>()),
                parse_variation(j.at("variation").get<std::string>())});
        }
    }
    return bundle;
}

std::size_t ValidationReport::count(std::string_view kind) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [&](const Violation& v) { return v.kind == kind; }));
}

ValidationReport validate_collection(const CollectionBundle& bundle, const Corpus& corpus) {
    ValidationReport report;
    auto add = [&](std::string kind, std::string qid, std::string msg) {
        report.violations.push_back(Violation{std::move(kind), std::move(qid), std::move(msg)});
    };

    std::map<std::string, std::string> texts;
    for (const auto& [id, txt] : bundle.queries) {
        if (!texts.emplace(id, txt).second) add("format", id, "query_id appears twice in queries file");
    }

    std::map<std::string, std::string> target;
    for (const auto& [id, doc] : bundle.qrels) {
        if (!texts.count(id)) add("referential", id, "qrels entry for unknown query");
        if (!target.emplace(id, doc).second) add("format", id, "more than one relevant document");
        if (corpus.find(doc) == nullptr) add("referential", id, "qrels document " + doc + " is not in the corpus");
    }

    std::map<std::string, Split> split_of;
    for (const auto& [id, s] : bundle.splits) {
        if (!texts.count(id)) add("split", id, "split entry for unknown query");
        if (!split_of.emplace(id, s).second) add("split", id, "query assigned to more than one split");
    }

    std::map<std::string, const CollectionQuery*> meta;
    for (const auto& m : bundle.metadata) meta.emplace(m.query_id, &m);

    for (const auto& [id, txt] : texts) {
        if (!target.count(id)) add("referential", id, "query has no qrels entry");
        if (!split_of.count(id)) add("split", id, "query is not assigned to a split");
        if (!meta.count(id)) add("format", id, "query has no metadata record");
        const auto t = target.find(id);
        if (t == target.end()) continue;
        if (const Document* doc = corpus.find(t->second); doc != nullptr) {
            if (!anonymity_check(txt, doc->title, doc->aliases)) {
                add("anonymity", id, "query text mentions the name of " + doc->doc_id);
            }
        }
    }

    // Domain ratio per partition, against the partition's own query count.
    std::map<DomainLabel, double> ratio;
    if (bundle.manifest.contains("domain_ratio")) {
        for (const auto& [k, v] : bundle.manifest.at("domain_ratio").items()) ratio[parse_domain(k)] = v.get<double>();
    }
    std::map<Partition, std::map<DomainLabel, std::size_t>> per_partition;
    std::map<std::pair<Partition, DomainLabel>, std::array<std::size_t, 3>> per_cell;
    for (const auto& [id, m] : meta) {
        if (!texts.count(id)) {
            add("format", id, "metadata for unknown query");
            continue;
        }
        ++per_partition[m->partition][m->domain];
        if (const auto s = split_of.find(id); s != split_of.end()) {
            ++per_cell[{m->partition, m->domain}][static_cast<std::size_t>(s->second)];
        }
    }
    if (!ratio.empty()) {
        for (const auto& [partition, counts] : per_partition) {
            SamplingConfig cfg;
            cfg.domain_ratio = ratio;
            cfg.target_count = 0;
            for (const auto& [d, c] : counts) cfg.target_count += c;
            std::map<DomainLabel, std::size_t> targets;
            try {
                targets = domain_targets(cfg);
            } catch (const ConfigError& e) {
                add("domain_ratio", "", e.what());
                continue;
            }
            for (const auto& [domain, want] : targets) {
                const std::size_t have = counts.count(domain) ? counts.at(domain) : 0;
                const auto diff = static_cast<long long>(have) - static_cast<long long>(want);
                if (diff > 1 || diff < -1) {
                    add("domain_ratio", "",
                        fmt::format("{} has {} {} queries, target {}", to_string(partition), have,
                                    to_string(domain), want));
                }
            }
        }
    }

    // Split stratification per (partition, domain) cell.
    if (bundle.manifest.contains("split_ratio")) {
        const auto& sr = bundle.manifest.at("split_ratio");
        const std::array<double, 3> r{sr.at("train").get<double>(), sr.at("dev").get<double>(),
                                      sr.at("test").get<double>()};
        for (const auto& [cell, counts] : per_cell) {
            const double n = static_cast<double>(counts[0] + counts[1] + counts[2]);
            for (std::size_t s = 0; s < 3; ++s) {
                if (std::abs(static_cast<double>(counts[s]) - n * r[s]) >= 1.0) {
                    add("stratification", "",
                        fmt::format("{} has {} {} queries out of {}", cell_label(cell.first, cell.second),
                                    counts[s], to_string(static_cast<Split>(s)), n));
                }
            }
        }
    }
    return report;
}

}  // namespace totsim
