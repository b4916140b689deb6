#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace totsim {

/// Language-aware lexical tokenizer.
///
/// Both modes first apply NFKC_Casefold, so case and full-width variants collapse.
/// Whitespace mode splits on anything that is not a letter, digit or mark.
/// CharNgram mode emits overlapping n-grams over Han/Kana/Hangul runs (a run shorter
/// than n is kept whole) and whitespace-mode tokens for everything else.
class Tokenizer {
public:
    enum class Mode { Whitespace, CharNgram };

    static Tokenizer whitespace() { return Tokenizer(Mode::Whitespace, 0); }
    static Tokenizer char_ngram(std::size_t n = 2);
    /// Whitespace for alphabetic languages, CharNgram(2) for zh/ja/ko.
    static Tokenizer for_language(std::string_view language);
    /// Inverse of descriptor(): "whitespace" or "cjk-ngram:<n>" (plain "cjk-bigram" accepted).
    static Tokenizer from_descriptor(std::string_view descriptor);

    [[nodiscard]] std::vector<std::string> tokenize(std::string_view text) const;
    [[nodiscard]] std::string descriptor() const;

    [[nodiscard]] Mode mode() const noexcept { return mode_; }
    [[nodiscard]] std::size_t n() const noexcept { return n_; }

    friend bool operator==(const Tokenizer&, const Tokenizer&) = default;

private:
    Tokenizer(Mode mode, std::size_t n) : mode_(mode), n_(n) {}

    Mode mode_;
    std::size_t n_;
};

/// True for code points in the Han, Hiragana, Katakana or Hangul scripts
/// (script extensions included, so the Katakana prolonged sound mark counts).
[[nodiscard]] bool is_cjk_codepoint(char32_t c);

}  // namespace totsim
