#include "totsim/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "totsim/error.hpp"

namespace totsim::text {

namespace {

// Length of the UTF-8 sequence starting with `lead`, or 0 for an invalid lead byte.
std::size_t sequence_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) return lead >= 0xC2 ? 2 : 0;
    if ((lead & 0xF0) == 0xE0) return 3;
    if ((lead & 0xF8) == 0xF0) return lead <= 0xF4 ? 4 : 0;
    return 0;
}

const icu::Normalizer2& nfkc_cf() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFKCCasefoldInstance(status);
    if (U_FAILURE(status) || norm == nullptr) {
        throw Error(std::string("ICU NFKC_Casefold unavailable: ") + u_errorName(status));
    }
    return *norm;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto lead = static_cast<unsigned char>(s[i]);
        const std::size_t len = sequence_length(lead);
        if (len == 0 || i + len > s.size()) return false;
        char32_t cp = len == 1 ? lead : lead & (0x7F >> len);
        for (std::size_t k = 1; k < len; ++k) {
            const auto c = static_cast<unsigned char>(s[i + k]);
            if ((c & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (c & 0x3F);
        }
        // overlong forms, surrogates, out of range
        if ((len == 3 && cp < 0x800) || (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ||
            (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += len;
    }
    return true;
}

std::size_t codepoint_count(std::string_view s) {
    std::size_t n = 0;
    for (const char c : s) {
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    }
    return n;
}

std::string_view codepoint_prefix(std::string_view s, std::size_t n) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            if (seen == n) return s.substr(0, i);
            ++seen;
        }
    }
    return s;
}

std::string nfkc_casefold(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::UnicodeString in = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    const icu::UnicodeString out = nfkc_cf().normalize(in, status);
    if (U_FAILURE(status)) {
        throw Error(std::string("normalization failed: ") + u_errorName(status));
    }
    std::string result;
    out.toUTF8String(result);
    return result;
}

std::string match_key(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::UnicodeString in = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    const icu::UnicodeString folded = nfkc_cf().normalize(in, status);
    if (U_FAILURE(status)) {
        throw Error(std::string("normalization failed: ") + u_errorName(status));
    }
    icu::UnicodeString stripped;
    for (int32_t i = 0; i < folded.length();) {
        const UChar32 c = folded.char32At(i);
        if (!u_isUWhiteSpace(c)) stripped.append(c);
        i += U16_LENGTH(c);
    }
    std::string result;
    stripped.toUTF8String(result);
    return result;
}

std::string single_line(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace totsim::text
