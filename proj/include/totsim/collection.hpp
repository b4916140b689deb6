#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "totsim/corpus.hpp"
#include "totsim/generation.hpp"
#include "totsim/variation.hpp"

namespace totsim {

enum class Split { Train, Dev, Test };

[[nodiscard]] std::string_view to_string(Split s);
[[nodiscard]] Split parse_split(std::string_view s);

struct CollectionSpec {
    std::string language;
    std::size_t query_count = 0;  ///< expected candidates (accepted + discarded); 0 = unchecked
    std::array<double, 3> split_ratio{0.8, 0.1, 0.1};  ///< train, dev, test
    std::map<Partition, VariationId> strategy_map;
    std::uint64_t seed = 0;
    std::map<DomainLabel, double> domain_ratio{
        {DomainLabel::General, 0.8}, {DomainLabel::Movies, 0.1}, {DomainLabel::People, 0.1}};

    /// Throws ConfigError on ratios that do not sum to 1 within 1e-9 or negative entries.
    void validate() const;
};

struct CollectionQuery {
    std::string query_id;
    std::string text;
    std::string doc_id;
    Partition partition = Partition::Full;
    DomainLabel domain = DomainLabel::General;
    VariationId variation = VariationId::V1;
};

/// In-memory form of the released files. Each vector mirrors one file, so a bundle read
/// back from disk can carry the same defects the validator looks for.
struct CollectionBundle {
    std::string language;
    std::vector<std::pair<std::string, std::string>> queries;  ///< query_id, text
    std::vector<std::pair<std::string, std::string>> qrels;    ///< query_id, doc_id
    std::vector<std::pair<std::string, Split>> splits;
    std::vector<CollectionQuery> metadata;  ///< text left empty
    nlohmann::json manifest;
};

inline constexpr int kCollectionSchemaVersion = 1;

/// Per-cell split sizes by largest remainder. Ties in the fractional part go to the
/// split with the larger `carry` (shortfall accumulated over earlier cells), then to the
/// earlier split. `carry` is updated with this cell's shortfall.
[[nodiscard]] std::array<std::size_t, 3> split_counts(std::size_t n,
                                                      const std::array<double, 3>& ratio,
                                                      std::array<double, 3>* carry = nullptr);

/// Builds the bundle from a query manifest. Throws ValidationError when a record names a
/// document missing from `corpus`, uses a variation other than the strategy chosen for
/// its partition, belongs to another language, or repeats a query_id.
[[nodiscard]] CollectionBundle assemble_collection(const std::vector<QueryRecord>& records,
                                                   const CollectionSpec& spec, const Corpus& corpus,
                                                   const std::string& config_hash);

/// Files: queries.tsv, qrels.txt, splits.tsv, metadata.jsonl, manifest.json. Each file
/// is written atomically.
void write_collection(const CollectionBundle& bundle, const std::filesystem::path& dir);
[[nodiscard]] CollectionBundle load_collection(const std::filesystem::path& dir);

struct Violation {
    std::string kind;  ///< referential, split, anonymity, domain_ratio, stratification, format
    std::string query_id;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
    [[nodiscard]] std::size_t count(std::string_view kind) const;
};

[[nodiscard]] ValidationReport validate_collection(const CollectionBundle& bundle,
                                                   const Corpus& corpus);

}  // namespace totsim
