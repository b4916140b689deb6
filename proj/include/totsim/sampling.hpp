#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "totsim/corpus.hpp"

namespace totsim {

struct SamplingConfig {
    std::size_t bucket_count = 20;
    std::map<DomainLabel, double> domain_ratio{
        {DomainLabel::General, 0.8}, {DomainLabel::Movies, 0.1}, {DomainLabel::People, 0.1}};
    std::size_t target_count = 2500;
    std::uint64_t seed = 0;

    /// Throws ConfigError when proportions do not sum to 1 (within 1e-9) or counts are zero.
    void validate() const;
};

void to_json(nlohmann::json& j, const SamplingConfig& c);
void from_json(const nlohmann::json& j, SamplingConfig& c);

struct EntityCandidate {
    std::string doc_id;
    Partition partition = Partition::Full;
    DomainLabel domain = DomainLabel::General;
    std::size_t popularity_bucket = 0;

    friend bool operator==(const EntityCandidate&, const EntityCandidate&) = default;
};

/// Popularity-ordered pool split into contiguous buckets of doc_ids.
struct StratifiedPool {
    std::vector<std::vector<std::string>> buckets;

    [[nodiscard]] std::size_t size() const;
};

/// Sort by descending page_views (ties by doc_id) and cut into `bucket_count` runs whose
/// sizes differ by at most one; the remainder goes to the earliest buckets.
[[nodiscard]] StratifiedPool stratify(const DocumentPool& pool, std::size_t bucket_count);

/// Per-domain draw counts: round(target * ratio) for every domain except General, which
/// absorbs the rounding residue.
[[nodiscard]] std::map<DomainLabel, std::size_t> domain_targets(const SamplingConfig& config);

/// Round-robin over buckets, one seeded uniform draw without replacement per visit.
/// Domains are emitted in Movies, People, General order.
[[nodiscard]] std::vector<EntityCandidate> sample_candidates(
    const std::map<DomainLabel, StratifiedPool>& pools, const SamplingConfig& config,
    Partition partition);

struct CandidateManifestRow {
    EntityCandidate candidate;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string rng;
};

/// One JSON object per line: doc_id, partition, domain, bucket, seed, config_hash, rng.
void write_candidate_manifest(std::ostream& out, const std::vector<EntityCandidate>& candidates,
                              std::uint64_t seed, const std::string& config_hash);
[[nodiscard]] std::vector<CandidateManifestRow> read_candidate_manifest(std::istream& in);

}  // namespace totsim
