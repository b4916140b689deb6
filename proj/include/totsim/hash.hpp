#pragma once

#include <string>
#include <string_view>

namespace totsim {

/// Lower-case hex SHA-256 digest.
[[nodiscard]] std::string sha256_hex(std::string_view data);

}  // namespace totsim
