#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace attnlab::csv {

/// Metadata lines written as `# key=value` before the header row.
using Metadata = std::vector<std::pair<std::string, std::string>>;

/// 17 significant digits, enough for an exact round-trip.
std::string format_double(double v);

void write_metadata(std::ostream& os, const Metadata& meta);

void write_row(std::ostream& os, const std::vector<std::string>& cells);

struct Table {
  Metadata metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `column` in header; throws ConfigError when missing.
  std::size_t column(const std::string& name) const;
};

/// Reads a comma-separated file with optional leading `# key=value` lines.
Table read(const std::filesystem::path& path);

}  // namespace attnlab::csv
