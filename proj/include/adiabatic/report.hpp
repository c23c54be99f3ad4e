#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace adiabatic {

/// Shortest decimal that parses back to the same double; "nan", "inf",
/// "-inf" for non-finite values.
std::string format_double(double v);

/// Header-first CSV with LF line endings. Footer lines start with '#'.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& cells);
  void add_footer(const std::string& key, double value);
  void add_footer(const std::string& key, const std::string& value);

  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
  std::vector<std::string> footer_;
};

/// Writes `text` verbatim (binary mode, so LF stays LF).
void write_text(const std::filesystem::path& path, const std::string& text);

/// Minimal gnuplot script: one plot per (csv, x column, y columns) entry.
struct PlotSpec {
  std::string title;
  std::string csv;
  int x_column = 1;
  std::vector<int> y_columns;
  std::vector<std::string> labels;
  bool log_x = false;
  bool log_y = false;
};

std::string gnuplot_script(const std::vector<PlotSpec>& plots);

}  // namespace adiabatic
