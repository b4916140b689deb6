#include "totsim/tokenizer.hpp"

#include <charconv>

#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include "totsim/error.hpp"
#include "totsim/text.hpp"

namespace totsim {

namespace {

enum class CharClass { Separator, Word, Cjk };

CharClass classify(UChar32 c, bool cjk_aware) {
    if (!u_isalnum(c) && (U_GET_GC_MASK(c) & U_GC_M_MASK) == 0) return CharClass::Separator;
    // Ideographic punctuation carries Han in its script extensions; it was already
    // rejected above as a non-word character.
    if (cjk_aware && is_cjk_codepoint(static_cast<char32_t>(c))) return CharClass::Cjk;
    return CharClass::Word;
}

void append_utf8(std::string& out, UChar32 c) {
    char buf[4];
    int32_t len = 0;
    U8_APPEND_UNSAFE(reinterpret_cast<uint8_t*>(buf), len, c);
    out.append(buf, static_cast<std::size_t>(len));
}

void emit_ngrams(const std::vector<UChar32>& run, std::size_t n, std::vector<std::string>& out) {
    if (run.empty()) return;
    if (run.size() < n) {
        std::string tok;
        for (const UChar32 c : run) append_utf8(tok, c);
        out.push_back(std::move(tok));
        return;
    }
    for (std::size_t i = 0; i + n <= run.size(); ++i) {
        std::string tok;
        for (std::size_t k = 0; k < n; ++k) append_utf8(tok, run[i + k]);
        out.push_back(std::move(tok));
    }
}

}  // namespace

bool is_cjk_codepoint(char32_t c) {
    const auto cp = static_cast<UChar32>(c);
    return uscript_hasScript(cp, USCRIPT_HAN) || uscript_hasScript(cp, USCRIPT_HIRAGANA) ||
           uscript_hasScript(cp, USCRIPT_KATAKANA) || uscript_hasScript(cp, USCRIPT_HANGUL);
}

Tokenizer Tokenizer::char_ngram(std::size_t n) {
    if (n == 0) throw ConfigError("n-gram size must be positive");
    return Tokenizer(Mode::CharNgram, n);
}

Tokenizer Tokenizer::for_language(std::string_view language) {
    if (language == "zh" || language == "ja" || language == "ko") return char_ngram(2);
    return whitespace();
}

Tokenizer Tokenizer::from_descriptor(std::string_view d) {
    if (d == "whitespace") return whitespace();
    if (d == "cjk-bigram") return char_ngram(2);
    constexpr std::string_view prefix = "cjk-ngram:";
    if (d.starts_with(prefix)) {
        std::size_t n = 0;
        const auto digits = d.substr(prefix.size());
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && n > 0) return char_ngram(n);
    }
    throw ConfigError("unknown tokenizer '" + std::string(d) + "'");
}

std::string Tokenizer::descriptor() const {
    if (mode_ == Mode::Whitespace) return "whitespace";
    return "cjk-ngram:" + std::to_string(n_);
}

std::vector<std::string> Tokenizer::tokenize(std::string_view input) const {
    std::vector<std::string> tokens;
    if (input.empty()) return tokens;
    const std::string folded = text::nfkc_casefold(input);
    const bool cjk_aware = mode_ == Mode::CharNgram;

    std::string word;
    std::vector<UChar32> cjk_run;
    auto flush = [&] {
        if (!word.empty()) tokens.push_back(std::move(word));
        word.clear();
        emit_ngrams(cjk_run, n_, tokens);
        cjk_run.clear();
    };

    const auto* bytes = reinterpret_cast<const uint8_t*>(folded.data());
    const auto length = static_cast<int32_t>(folded.size());
    for (int32_t i = 0; i < length;) {
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        if (c < 0) {  // ill-formed sequence acts as a separator
            flush();
            continue;
        }
        switch (classify(c, cjk_aware)) {
            case CharClass::Separator:
                flush();
                break;
            case CharClass::Word:
                if (!cjk_run.empty()) flush();
                append_utf8(word, c);
                break;
            case CharClass::Cjk:
                if (!word.empty()) flush();
                cjk_run.push_back(c);
                break;
        }
    }
    flush();
    return tokens;
}

}  // namespace totsim
