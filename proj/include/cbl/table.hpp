#pragma once

// In-memory tables and their CSV / JSON renderings. Numbers are written in
// shortest round-trip form, so output is byte-stable for fixed input.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace cbl {

using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

enum class Format : std::uint8_t { csv, json, svg };

Format parse_format(const std::string& name);

/// Shortest decimal that round-trips; NaN and infinities are rejected.
std::string format_number(double v);

std::string to_csv(const Table& t);
/// Array of row objects keyed by column name; empty cells become null.
std::string to_json(const Table& t);

/// Writes CSV or JSON. Throws ValidationError on an empty table and
/// std::runtime_error on I/O failure.
void emit_table(const Table& t, Format format, const std::filesystem::path& path);

/// Whole-file helpers shared by the emitters.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace cbl
