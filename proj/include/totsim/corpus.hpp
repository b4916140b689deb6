#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace totsim {

enum class Partition { Monolingual, Bilingual, Full };

enum class DomainLabel { Movies, People, General };

inline constexpr DomainLabel kAllDomains[] = {DomainLabel::Movies, DomainLabel::People,
                                              DomainLabel::General};

[[nodiscard]] std::string_view to_string(Partition p);
[[nodiscard]] std::string_view to_string(DomainLabel d);
/// Single-letter tag used in query ids: M, B or F.
[[nodiscard]] char initial(Partition p);
[[nodiscard]] Partition parse_partition(std::string_view s);
[[nodiscard]] DomainLabel parse_domain(std::string_view s);

/// One corpus page.
struct Document {
    std::string doc_id;
    std::string title;
    std::vector<std::string> aliases;
    std::string body;
    std::string language;
    std::uint64_t page_views = 0;
    std::optional<std::string> en_link;
    std::vector<std::string> instance_of;
    std::size_t length_chars = 0;  ///< code points in body
};

/// Immutable, doc_id-ordered document collection for one language.
class Corpus {
public:
    Corpus() = default;

    /// Build from records; throws IngestError on a duplicate doc_id.
    static Corpus from_documents(std::string language, std::vector<Document> docs);

    /// Line-delimited JSON. Blank lines are skipped. `workers` > 1 parses in parallel;
    /// the result does not depend on it.
    static Corpus parse(std::istream& in, std::string language, unsigned workers = 1);
    static Corpus load(const std::filesystem::path& path, std::string language,
                       unsigned workers = 1);

    [[nodiscard]] const std::string& language() const noexcept { return language_; }
    [[nodiscard]] std::size_t size() const noexcept { return docs_.size(); }
    [[nodiscard]] bool empty() const noexcept { return docs_.empty(); }

    [[nodiscard]] const Document* find(std::string_view doc_id) const;
    /// Throws std::out_of_range when absent.
    [[nodiscard]] const Document& at(std::string_view doc_id) const;

    /// Documents in ascending doc_id order.
    [[nodiscard]] std::span<const Document> documents() const noexcept { return docs_; }

private:
    std::string language_;
    std::vector<Document> docs_;
};

/// Parse one corpus line; `line_no` is used in error messages.
[[nodiscard]] Document parse_document_line(std::string_view line, std::string_view language,
                                           std::size_t line_no);

struct PartitionResult {
    std::map<std::string, Partition> assignment;
    /// Documents whose en_link did not resolve, in doc_id order.
    std::vector<std::string> demoted;

    [[nodiscard]] std::size_t count(Partition p) const;
    [[nodiscard]] Partition of(std::string_view doc_id) const;
};

/// Split a non-English corpus into Monolingual / Bilingual. A dangling en_link
/// demotes the page to Monolingual and logs a warning.
[[nodiscard]] PartitionResult partition_corpus(const Corpus& corpus, const Corpus& english);

/// Every document of the corpus in the Full partition (used for English).
[[nodiscard]] PartitionResult full_partition(const Corpus& corpus);

/// Non-owning view of documents in some corpus.
using DocumentPool = std::vector<const Document*>;

[[nodiscard]] DocumentPool all_documents(const Corpus& corpus);

/// Descending page_views, ties by ascending doc_id.
void sort_by_popularity(DocumentPool& pool);

/// The ceil(top_fraction * |pool|) most viewed documents, in popularity order.
[[nodiscard]] DocumentPool filter_by_popularity(const DocumentPool& pool, double top_fraction);

/// Documents with length_chars >= min_chars, order preserved.
[[nodiscard]] DocumentPool filter_by_length(const DocumentPool& pool, std::size_t min_chars);

inline constexpr std::size_t kDefaultMinChars = 1000;

/// Metadata class id -> domain table.
class DomainMap {
public:
    DomainMap() = default;
    explicit DomainMap(std::map<std::string, DomainLabel> table) : table_(std::move(table)) {}

    /// "class_id<TAB>label" lines; '#' starts a comment line.
    static DomainMap parse(std::istream& in);
    static DomainMap load(const std::filesystem::path& path);
    /// Human -> People; film, animated film, television film -> Movies.
    static DomainMap builtin();

    [[nodiscard]] std::optional<DomainLabel> lookup(std::string_view class_id) const;
    [[nodiscard]] const std::map<std::string, DomainLabel>& table() const noexcept { return table_; }

private:
    std::map<std::string, DomainLabel> table_;
};

/// Label of the first instance_of entry present in the map; General otherwise.
[[nodiscard]] DomainLabel assign_domain(const Document& doc, const DomainMap& mapping);

}  // namespace totsim
