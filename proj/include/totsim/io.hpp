#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace totsim {

/// Write to a sibling temporary file, then rename over `path`. Parent directories are
/// created as needed.
void atomic_write_file(const std::filesystem::path& path, std::string_view contents);

/// Whole file as bytes; throws Error when it cannot be opened.
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

}  // namespace totsim
