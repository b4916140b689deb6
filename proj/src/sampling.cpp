#include "totsim/sampling.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "totsim/error.hpp"
#include "totsim/rng.hpp"

namespace totsim {

using nlohmann::json;

void SamplingConfig::validate() const {
    if (bucket_count < 1) throw ConfigError("sampling.bucket_count must be >= 1");
    if (target_count < 1) throw ConfigError("sampling.target_count must be >= 1");
    double sum = 0.0;
    for (const auto& [domain, p] : domain_ratio) {
        if (p < 0.0) throw ConfigError("sampling.domain_ratio has a negative proportion");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("sampling.domain_ratio must sum to 1, got " + std::to_string(sum));
    }
}

void to_json(json& j, const SamplingConfig& c) {
    json ratio = json::object();
    for (const auto& [d, p] : c.domain_ratio) ratio[std::string(to_string(d))] = p;
    j = json{{"bucket_count", c.bucket_count},
             {"domain_ratio", ratio},
             {"target_count", c.target_count},
             {"seed", c.seed}};
}

void from_json(const json& j, SamplingConfig& c) {
    c = SamplingConfig{};
    if (j.contains("bucket_count")) c.bucket_count = j.at("bucket_count").get<std::size_t>();
    if (j.contains("target_count")) c.target_count = j.at("target_count").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("domain_ratio")) {
        c.domain_ratio.clear();
        for (const auto& [k, v] : j.at("domain_ratio").items()) {
            c.domain_ratio[parse_domain(k)] = v.get<double>();
        }
    }
}

std::size_t StratifiedPool::size() const {
    return std::accumulate(buckets.begin(), buckets.end(), std::size_t{0},
                           [](std::size_t acc, const auto& b) { return acc + b.size(); });
}

StratifiedPool stratify(const DocumentPool& pool, std::size_t bucket_count) {
    if (pool.empty()) throw SamplingError("stratify: empty pool");
    if (bucket_count == 0) throw SamplingError("stratify: bucket_count must be >= 1");
    if (pool.size() < bucket_count) {
        spdlog::info("[sample] pool of {} documents leaves {} of {} buckets empty", pool.size(),
                     bucket_count - pool.size(), bucket_count);
    }
    DocumentPool ranked = pool;
    sort_by_popularity(ranked);

    StratifiedPool out;
    out.buckets.resize(bucket_count);
    const std::size_t base = ranked.size() / bucket_count;
    const std::size_t extra = ranked.size() % bucket_count;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < bucket_count; ++b) {
        const std::size_t n = base + (b < extra ? 1 : 0);
        auto& bucket = out.buckets[b];
        bucket.reserve(n);
        for (std::size_t i = 0; i < n; ++i) bucket.push_back(ranked[pos++]->doc_id);
    }
    return out;
}

std::map<DomainLabel, std::size_t> domain_targets(const SamplingConfig& config) {
    config.validate();
    std::map<DomainLabel, std::size_t> targets;
    std::size_t assigned = 0;
    for (const auto& [domain, p] : config.domain_ratio) {
        if (domain == DomainLabel::General) continue;
        const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(config.target_count) * p));
        targets[domain] = n;
        assigned += n;
    }
    if (assigned > config.target_count) {
        throw ConfigError("sampling.domain_ratio rounds above target_count");
    }
    targets[DomainLabel::General] = config.target_count - assigned;
    return targets;
}

std::vector<EntityCandidate> sample_candidates(const std::map<DomainLabel, StratifiedPool>& pools,
                                               const SamplingConfig& config,
                                               Partition partition) {
    const auto targets = domain_targets(config);
    static const StratifiedPool kEmpty{};

    // Check every domain before drawing anything so the error lists each shortfall.
    std::vector<std::string> short_pools;
    for (const DomainLabel domain : kAllDomains) {
        const std::size_t want = targets.count(domain) ? targets.at(domain) : 0;
        const auto it = pools.find(domain);
        const std::size_t have = it == pools.end() ? 0 : it->second.size();
        if (have < want) {
            short_pools.push_back(fmt::format("{} pool holds {} documents but {} are required (shortfall {})",
                                              to_string(domain), have, want, want - have));
        }
    }
    if (!short_pools.empty()) {
        throw SamplingError(fmt::format("partition {}: {}", to_string(partition), fmt::join(short_pools, "; ")));
    }

    std::vector<EntityCandidate> out;
    out.reserve(config.target_count);
    for (const DomainLabel domain : kAllDomains) {
        const std::size_t want = targets.count(domain) ? targets.at(domain) : 0;
        if (want == 0) continue;
        const auto it = pools.find(domain);
        const StratifiedPool& pool = it == pools.end() ? kEmpty : it->second;

        auto remaining = pool.buckets;
        Rng rng = Rng::derive(config.seed, fmt::format("sample/{}/{}", to_string(partition),
                                                       to_string(domain)));
        std::size_t drawn = 0;
        while (drawn < want) {
            for (std::size_t b = 0; b < remaining.size() && drawn < want; ++b) {
                auto& bucket = remaining[b];
                if (bucket.empty()) continue;
                const auto pick = static_cast<std::size_t>(rng.uniform_below(bucket.size()));
                out.push_back(EntityCandidate{bucket[pick], partition, domain, b});
                bucket.erase(bucket.begin() + static_cast<std::ptrdiff_t>(pick));
                ++drawn;
            }
        }
    }
    return out;
}

void write_candidate_manifest(std::ostream& out, const std::vector<EntityCandidate>& candidates,
                              std::uint64_t seed, const std::string& config_hash) {
    for (const auto& c : candidates) {
        const json row{{"doc_id", c.doc_id},
                       {"partition", to_string(c.partition)},
                       {"domain", to_string(c.domain)},
                       {"bucket", c.popularity_bucket},
                       {"seed", seed},
                       {"config_hash", config_hash},
                       {"rng", Rng::algorithm}};
        out << row.dump() << '\n';
    }
}

std::vector<CandidateManifestRow> read_candidate_manifest(std::istream& in) {
    std::vector<CandidateManifestRow> rows;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            CandidateManifestRow row;
            row.candidate.doc_id = j.at("doc_id").get<std::string>();
            row.candidate.partition = parse_partition(j.at("partition").get<std::string>());
            row.candidate.domain = parse_domain(j.at("domain").get<std::string>());
            row.candidate.popularity_bucket = j.at("bucket").get<std::size_t>();
            row.seed = j.at("seed").get<std::uint64_t>();
            row.config_hash = j.at("config_hash").get<std::string>();
            row.rng = j.value("rng", std::string(Rng::algorithm));
            rows.push_back(std::move(row));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad candidate record: ") + e.what(), line_no);
        }
    }
    return rows;
}

}  // namespace totsim
