#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lesionsynth::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Comma-separated with optional double-quoted fields. Throws IoError if the
/// file cannot be opened and ConfigError on ragged rows.
Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

/// Shortest round-trip decimal representation.
std::string format(double v);
std::string format(const std::optional<double>& v);
/// Empty cell -> nullopt; throws ConfigError on non-numeric text.
std::optional<double> parse_optional(const std::string& cell);

}  // namespace lesionsynth::csv
