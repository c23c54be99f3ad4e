#include "adiabatic/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adiabatic/types.hpp"

namespace adiabatic {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw ConfigError("csv header must not be empty");
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  add_row(cells);
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) throw ConfigError("csv row width differs from header");
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  rows_.push_back(std::move(line));
}

void CsvTable::add_footer(const std::string& key, double value) {
  add_footer(key, format_double(value));
}

void CsvTable::add_footer(const std::string& key, const std::string& value) {
  footer_.push_back("# " + key + "," + value);
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const auto& r : rows_) out += r + '\n';
  for (const auto& f : footer_) out += f + '\n';
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str()); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeAbort("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw RuntimeAbort("write failed for '" + path.string() + "'");
}

std::string gnuplot_script(const std::vector<PlotSpec>& plots) {
  std::ostringstream g;
  g << "# gnuplot -persist plot.gp\n";
  g << "set datafile separator ','\n";
  g << "set datafile commentschars '#'\n";
  g << "set key autotitle columnhead\n";
  g << "set grid\n";
  for (const auto& p : plots) {
    g << "\nset title '" << p.title << "'\n";
    g << (p.log_x ? "set logscale x\n" : "unset logscale x\n");
    g << (p.log_y ? "set logscale y\n" : "unset logscale y\n");
    g << "plot ";
    for (std::size_t i = 0; i < p.y_columns.size(); ++i) {
      if (i) g << ", \\\n     ";
      g << "'" << p.csv << "' using " << p.x_column << ":" << p.y_columns[i]
        << " with linespoints";
      if (i < p.labels.size()) g << " title '" << p.labels[i] << "'";
    }
    g << "\npause -1\n";
  }
  return g.str();
}

}  // namespace adiabatic
