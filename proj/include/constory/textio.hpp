#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Small file and table helpers shared by the artifact writers.
namespace constory::textio {

std::string read_file(const std::filesystem::path& path);  // throws Error

// Writes through a temporary sibling and renames, so readers never observe a
// partially written artifact. Creates parent directories.
void write_file(const std::filesystem::path& path, std::string_view contents);

// RFC 4180 quoting when the field contains a comma, quote or newline.
std::string csv_field(std::string_view s);
std::string csv_row(const std::vector<std::string>& fields);

// Fixed-point formatting; negative zero prints as zero.
std::string fixed(double value, int decimals);

}  // namespace constory::textio
