#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "totsim/corpus.hpp"
#include "totsim/tokenizer.hpp"

namespace totsim {

/// Immutable term -> postings index with the collection statistics BM25 and
/// query likelihood need. Documents are numbered in corpus (doc_id) order.
class InvertedIndex {
public:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;

        friend bool operator==(const Posting&, const Posting&) = default;
    };

    static constexpr std::uint32_t kFormatVersion = 1;

    InvertedIndex() : tokenizer_(Tokenizer::whitespace()) {}

    /// Tokenization runs on `workers` threads; the merge is sequential in document order.
    static InvertedIndex build(const Corpus& corpus, const Tokenizer& tokenizer,
                               unsigned workers = 1);

    /// Binary format: magic, version, then length-prefixed little-endian sections.
    void write(std::ostream& out) const;
    static InvertedIndex read(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

    [[nodiscard]] const Tokenizer& tokenizer() const noexcept { return tokenizer_; }
    [[nodiscard]] const std::string& language() const noexcept { return language_; }

    [[nodiscard]] std::size_t document_count() const noexcept { return doc_ids_.size(); }
    [[nodiscard]] const std::string& doc_id(std::uint32_t doc) const { return doc_ids_.at(doc); }
    [[nodiscard]] std::uint32_t doc_length(std::uint32_t doc) const { return doc_lengths_.at(doc); }
    [[nodiscard]] std::uint64_t collection_length() const noexcept { return collection_length_; }
    [[nodiscard]] double average_doc_length() const noexcept;
    [[nodiscard]] std::size_t vocabulary_size() const noexcept { return terms_.size(); }

    /// Postings sorted by document number; empty for unknown terms.
    [[nodiscard]] std::span<const Posting> postings(std::string_view term) const;
    [[nodiscard]] std::uint32_t df(std::string_view term) const;
    [[nodiscard]] std::uint64_t ctf(std::string_view term) const;
    [[nodiscard]] std::uint32_t tf(std::string_view term, std::string_view doc_id) const;
    /// Term frequency by document number (binary search in the postings).
    [[nodiscard]] static std::uint32_t tf_in(std::span<const Posting> postings, std::uint32_t doc);

    /// Position of doc_id, or -1.
    [[nodiscard]] std::int64_t doc_number(std::string_view doc_id) const;

private:
    [[nodiscard]] std::int64_t term_number(std::string_view term) const;

    Tokenizer tokenizer_;
    std::string language_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::uint64_t collection_length_ = 0;
    std::vector<std::string> terms_;  // sorted
    std::vector<std::uint64_t> ctf_;
    std::vector<std::vector<Posting>> postings_;
};

}  // namespace totsim
