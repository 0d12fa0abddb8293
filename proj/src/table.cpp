#include "cbl/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cbl/error.hpp"

namespace cbl {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw ContractViolation("Table::add_row: width mismatch");
  rows.push_back(std::move(row));
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  if (name == "svg") return Format::svg;
  throw ValidationError("unknown format '" + name + "' (expected csv, json or svg)");
}

std::string format_number(double v) {
  if (!std::isfinite(v)) throw ValidationError("cannot format non-finite number");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_cell(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return std::isfinite(v) ? format_number(v) : std::string{}; }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
      }
      return q + '"';
    }
  } visitor;
  return std::visit(visitor, c);
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t k = 0; k < t.columns.size(); ++k) out += (k ? "," : "") + t.columns[k];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + csv_cell(row[k]);
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& t) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < row.size(); ++k) {
      const Cell& c = row[k];
      if (const auto* i = std::get_if<std::int64_t>(&c)) {
        obj[t.columns[k]] = *i;
      } else if (const auto* d = std::get_if<double>(&c)) {
        obj[t.columns[k]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr);
      } else if (const auto* s = std::get_if<std::string>(&c)) {
        obj[t.columns[k]] = *s;
      } else {
        obj[t.columns[k]] = nullptr;
      }
    }
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit_table(const Table& t, Format format, const std::filesystem::path& path) {
  if (t.rows.empty()) throw ValidationError("refusing to emit an empty table");
  switch (format) {
    case Format::csv: write_file(path, to_csv(t)); return;
    case Format::json: write_file(path, to_json(t)); return;
    case Format::svg: throw ValidationError("tables cannot be written as svg; use emit_svg_chart");
  }
}

}  // namespace cbl
