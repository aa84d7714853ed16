#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace faec {

// Writes `contents` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace faec
