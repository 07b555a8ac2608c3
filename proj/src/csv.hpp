#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cova::detail {

using CsvRow = std::vector<std::string>;

// RFC 4180 subset: quoted fields with doubled quotes, LF or CRLF line ends.
std::vector<CsvRow> read_csv(const std::filesystem::path& path);
std::vector<CsvRow> parse_csv(const std::string& text);
std::string csv_escape(const std::string& field);

// Checks the header row and returns data rows; throws SchemaError on mismatch.
std::vector<CsvRow> expect_csv(const std::filesystem::path& path, const CsvRow& header);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace cova::detail
