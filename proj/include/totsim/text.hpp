#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace totsim::text {

[[nodiscard]] bool is_valid_utf8(std::string_view s);

/// Number of Unicode code points. Input must be valid UTF-8.
[[nodiscard]] std::size_t codepoint_count(std::string_view s);

/// The first `n` code points of `s` (all of `s` when shorter).
[[nodiscard]] std::string_view codepoint_prefix(std::string_view s, std::size_t n);

/// Unicode NFKC_Casefold (compatibility decomposition, case folding, recomposition).
[[nodiscard]] std::string nfkc_casefold(std::string_view s);

/// Matching key for entity-name detection: NFKC_Casefold with all white space removed.
[[nodiscard]] std::string match_key(std::string_view s);

/// Replace tabs, carriage returns and newlines with single spaces.
[[nodiscard]] std::string single_line(std::string_view s);

[[nodiscard]] std::string trim(std::string_view s);

}  // namespace totsim::text
