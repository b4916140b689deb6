#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "support/test_support.hpp"
#include "totsim/collection.hpp"
#include "totsim/error.hpp"

using namespace totsim;
using testing_support::make_doc;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

// Two partitions of `per_partition` queries each, domains 80/10/10 within each.
struct Fixture {
    Corpus corpus;
    std::vector<QueryRecord> records;
    CollectionSpec spec;

    explicit Fixture(std::size_t per_partition) {
        std::vector<Document> docs;
        const std::size_t movies = per_partition / 10, people = per_partition / 10;
        for (Partition p : {Partition::Monolingual, Partition::Bilingual}) {
            for (std::size_t i = 0; i < per_partition; ++i) {
                const std::string doc_id = std::string(1, initial(p)) + std::to_string(100000 + i);
                docs.push_back(make_doc(doc_id, "Entity" + doc_id, "body", "zh"));
                QueryRecord r;
                r.doc_id = doc_id;
                r.language = "zh";
                r.partition = p;
                r.domain = i < movies ? DomainLabel::Movies
                           : i < movies + people ? DomainLabel::People
                                                 : DomainLabel::General;
                r.variation = p == Partition::Monolingual ? VariationId::V1 : VariationId::V3;
                r.query_id = make_query_id("zh", p, doc_id);
                r.text = "something I half remember number " + std::to_string(i);
                r.attempts = 1;
                r.provider_fingerprint = "scripted";
                records.push_back(r);
            }
        }
        corpus = Corpus::from_documents("zh", std::move(docs));
        spec.language = "zh";
        spec.query_count = 2 * per_partition;
        spec.strategy_map = {{Partition::Monolingual, VariationId::V1}, {Partition::Bilingual, VariationId::V3}};
        spec.seed = 42;
    }
};

std::map<Split, std::size_t> split_totals(const CollectionBundle& b) {
    std::map<Split, std::size_t> out;
    for (const auto& [id, s] : b.splits) ++out[s];
    return out;
}

}  // namespace

TEST(SplitCounts, LargestRemainder) {
    EXPECT_EQ(split_counts(5000, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{4000, 500, 500}));
    EXPECT_EQ(split_counts(7, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{5, 1, 1}));
    EXPECT_EQ(split_counts(0, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{0, 0, 0}));
}

TEST(SplitCounts, CarryBalancesSmallCells) {
    std::array<double, 3> carry{};
    std::array<std::size_t, 3> total{};
    for (int cell = 0; cell < 4; ++cell) {
        const auto c = split_counts(5, {0.8, 0.1, 0.1}, &carry);
        for (int s = 0; s < 3; ++s) {
            total[s] += c[s];
            EXPECT_LT(std::abs(static_cast<double>(c[s]) - 5 * std::array{0.8, 0.1, 0.1}[s]), 1.0);
        }
    }
    EXPECT_EQ(total, (std::array<std::size_t, 3>{16, 2, 2}));
}

TEST(SplitCounts, EveryCellWithinOneOfIdeal) {
    std::mt19937 gen(4);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = gen() % 3000;
        const double a = 0.5 + (gen() % 400) / 1000.0;
        const double b = (1.0 - a) / 2;
        const std::array<double, 3> r{a, b, 1.0 - a - b};
        const auto c = split_counts(n, r);
        EXPECT_EQ(c[0] + c[1] + c[2], n);
        for (int s = 0; s < 3; ++s) EXPECT_LT(std::abs(static_cast<double>(c[s]) - n * r[s]), 1.0);
    }
}

TEST(Assemble, FiveThousandQueries) {
    Fixture f(2500);
    const auto bundle = assemble_collection(f.records, f.spec, f.corpus, "hash");
    const auto totals = split_totals(bundle);
    EXPECT_EQ(totals.at(Split::Train), 4000u);
    EXPECT_EQ(totals.at(Split::Dev), 500u);
    EXPECT_EQ(totals.at(Split::Test), 500u);
    EXPECT_EQ(bundle.manifest["counts"]["by_partition"]["Monolingual"], 2500);
    EXPECT_EQ(bundle.manifest["counts"]["by_partition"]["Bilingual"], 2500);
    EXPECT_EQ(bundle.manifest["config_hash"], "hash");
    EXPECT_EQ(bundle.manifest["seed"], 42);
    EXPECT_EQ(bundle.manifest["schema_version"], kCollectionSchemaVersion);
    EXPECT_TRUE(validate_collection(bundle, f.corpus).ok());
}

TEST(Assemble, SplitsPartitionTheQuerySet) {
    Fixture f(130);
    const auto bundle = assemble_collection(f.records, f.spec, f.corpus, "h");
    std::set<std::string> ids;
    for (const auto& [id, s] : bundle.splits) EXPECT_TRUE(ids.insert(id).second);
    std::set<std::string> queries;
    for (const auto& [id, t] : bundle.queries) queries.insert(id);
    EXPECT_EQ(ids, queries);
    EXPECT_EQ(bundle.qrels.size(), bundle.queries.size());
}

TEST(Assemble, StratifiedPerCell) {
    Fixture f(97);
    const auto bundle = assemble_collection(f.records, f.spec, f.corpus, "h");
    std::map<std::string, const CollectionQuery*> meta;
    for (const auto& m : bundle.metadata) meta[m.query_id] = &m;
    std::map<std::pair<Partition, DomainLabel>, std::array<double, 3>> cells;
    for (const auto& [id, s] : bundle.splits) {
        const auto* m = meta.at(id);
        cells[{m->partition, m->domain}][static_cast<std::size_t>(s)] += 1;
    }
    for (const auto& [cell, c] : cells) {
        const double n = c[0] + c[1] + c[2];
        EXPECT_LT(std::abs(c[0] - 0.8 * n), 1.0);
        EXPECT_LT(std::abs(c[1] - 0.1 * n), 1.0);
        EXPECT_LT(std::abs(c[2] - 0.1 * n), 1.0);
    }
}

TEST(Assemble, ByteIdenticalForSameSeed) {
    Fixture f(60);
    TempDir a, b, c;
    write_collection(assemble_collection(f.records, f.spec, f.corpus, "h"), a.path());
    write_collection(assemble_collection(f.records, f.spec, f.corpus, "h"), b.path());
    f.spec.seed = 43;
    write_collection(assemble_collection(f.records, f.spec, f.corpus, "h"), c.path());
    for (const char* name : {"queries.tsv", "qrels.txt", "splits.tsv", "metadata.jsonl", "manifest.json"}) {
        EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    }
    EXPECT_NE(slurp(a / "splits.tsv"), slurp(c / "splits.tsv"));
    EXPECT_FALSE(std::filesystem::exists(a / "manifest.json.tmp"));
}

TEST(Assemble, FileFormats) {
    Fixture f(10);
    TempDir dir;
    const auto bundle = assemble_collection(f.records, f.spec, f.corpus, "h");
    write_collection(bundle, dir.path());
    const auto queries = slurp(dir / "queries.tsv");
    const auto first = queries.substr(0, queries.find('\n'));
    EXPECT_EQ(first, bundle.queries.front().first + "\t" + bundle.queries.front().second);
    const auto qrels = slurp(dir / "qrels.txt");
    EXPECT_EQ(qrels.substr(0, qrels.find('\n')), bundle.qrels.front().first + " 0 " + bundle.qrels.front().second + " 1");
    const auto splits = slurp(dir / "splits.tsv");
    const auto line = splits.substr(0, splits.find('\n'));
    const auto split = line.substr(line.find('\t') + 1);
    EXPECT_TRUE(split == "train" || split == "dev" || split == "test");
    const auto back = load_collection(dir.path());
    EXPECT_EQ(back.queries, bundle.queries);
    EXPECT_EQ(back.qrels, bundle.qrels);
    EXPECT_EQ(back.splits, bundle.splits);
    EXPECT_EQ(back.manifest, bundle.manifest);
    EXPECT_TRUE(validate_collection(back, f.corpus).ok());
}

TEST(Assemble, DiscardsExcludedAndListed) {
    Fixture f(20);
    f.records[3].discarded = true;
    f.records[3].text.clear();
    f.records[3].attempts = 3;
    f.records[3].variation = VariationId::V4;  // discards are not checked against the strategy
    const auto bundle = assemble_collection(f.records, f.spec, f.corpus, "h");
    EXPECT_EQ(bundle.queries.size(), 39u);
    EXPECT_EQ(bundle.manifest["counts"]["discarded"], 1);
    EXPECT_EQ(bundle.manifest["discarded"][0], f.records[3].query_id);
}

TEST(Assemble, Errors) {
    {
        Fixture f(10);
        f.records[0].doc_id = "not-in-corpus";
        EXPECT_THROW((void)assemble_collection(f.records, f.spec, f.corpus, "h"), ValidationError);
    }
    {
        Fixture f(10);
        f.records[0].variation = VariationId::V2;
        EXPECT_THROW((void)assemble_collection(f.records, f.spec, f.corpus, "h"), ValidationError);
    }
    {
        Fixture f(10);
        f.records.push_back(f.records[0]);
        EXPECT_THROW((void)assemble_collection(f.records, f.spec, f.corpus, "h"), ValidationError);
    }
    {
        Fixture f(10);
        f.spec.split_ratio = {0.8, 0.1, 0.2};
        EXPECT_THROW(f.spec.validate(), ConfigError);
    }
}

TEST(Validate, DanglingQrelsDocument) {
    Fixture f(10);
    auto bundle = assemble_collection(f.records, f.spec, f.corpus, "h");
    bundle.qrels[0].second = "ghost";
    const auto report = validate_collection(bundle, f.corpus);
    EXPECT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.count("referential"), 1u);
}

TEST(Validate, PlantedLeakNamesQuery) {
    Fixture f(10);
    auto bundle = assemble_collection(f.records, f.spec, f.corpus, "h");
    const auto& doc_id = bundle.qrels[4].second;
    bundle.queries[4].second = "was it entity " + doc_id.substr(0) + "? no, " + f.corpus.at(doc_id).title;
    const auto report = validate_collection(bundle, f.corpus);
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].kind, "anonymity");
    EXPECT_EQ(report.violations[0].query_id, bundle.queries[4].first);
}

TEST(Validate, SplitCoverageAndDisjointness) {
    Fixture f(10);
    auto bundle = assemble_collection(f.records, f.spec, f.corpus, "h");
    bundle.splits.push_back(bundle.splits[0]);
    const auto missing = bundle.splits[1].first;
    bundle.splits.erase(bundle.splits.begin() + 1);
    const auto report = validate_collection(bundle, f.corpus);
    EXPECT_GE(report.count("split"), 2u);
    bool named = false;
    for (const auto& v : report.violations) named |= v.query_id == missing;
    EXPECT_TRUE(named);
}

TEST(Validate, DomainRatioOutsideTolerance) {
    Fixture f(50);
    for (auto& r : f.records) {
        if (r.partition == Partition::Monolingual && r.domain == DomainLabel::Movies) r.domain = DomainLabel::General;
    }
    const auto bundle = assemble_collection(f.records, f.spec, f.corpus, "h");
    const auto report = validate_collection(bundle, f.corpus);
    EXPECT_GE(report.count("domain_ratio"), 1u);
}
