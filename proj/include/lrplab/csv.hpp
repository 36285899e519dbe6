#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lrplab/errors.hpp"

namespace lrplab {

// Fixed-format float rendering so identical runs produce identical bytes.
inline std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::string csv_optional(const std::optional<double>& v) {
  return v ? csv_double(*v) : std::string();
}

// Column-oriented writer: one schema-version comment line first, then the
// column header, then data rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& schema,
            const std::vector<std::string>& columns)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot write csv " + path.string());
    out_ << "# schema: " << schema << "\n";
    write_row(columns);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ",";
      out_ << cells[i];
    }
    out_ << "\n";
    if (!out_) throw IoError("short write to " + path_.string());
  }

  void flush() { out_.flush(); }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct CsvFile {
  std::string schema;                          // from the leading comment line
  std::vector<std::string> columns;            // header row
  std::vector<std::vector<std::string>> rows;  // data rows, raw cells

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return int(i);
    throw FormatError("csv has no column '" + name + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline CsvFile parse_csv(const std::string& text) {
  CsvFile file;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto tag = line.find("schema:");
      if (tag != std::string::npos) {
        file.schema = line.substr(tag + 7);
        while (!file.schema.empty() && file.schema.front() == ' ')
          file.schema.erase(file.schema.begin());
      }
      continue;
    }
    auto cells = split_csv_line(line);
    if (!header_seen) {
      file.columns = cells;
      header_seen = true;
    } else {
      if (cells.size() != file.columns.size())
        throw FormatError("csv row has " + std::to_string(cells.size()) +
                          " cells, header has " +
                          std::to_string(file.columns.size()));
      file.rows.push_back(cells);
    }
  }
  if (!header_seen) throw FormatError("csv has no header row");
  return file;
}

inline CsvFile load_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open csv " + path.string());
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return parse_csv(text);
}

inline double csv_to_double(const std::string& cell) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw FormatError("bad number '" + cell + "' in csv");
  }
  if (used != cell.size()) throw FormatError("bad number '" + cell + "' in csv");
  return v;
}

inline std::optional<double> csv_to_optional(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return csv_to_double(cell);
}

}  // namespace lrplab
