#include <charconv>
#include <fstream>
#include <sstream>

#include "stackelberg/experiment.hpp"

namespace stackelberg::experiment {

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_table(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "#slf-trace v" << kCsvVersion << " kind=" << table.kind << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::logic_error("write_table: ragged row");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#slf-trace v", 0) != 0)
    throw ConfigError("", path + ": missing #slf-trace header");
  Table t;
  {
    std::istringstream head(line.substr(12));
    int version = 0;
    std::string kind;
    head >> version >> kind;
    if (version != kCsvVersion)
      throw ConfigError("", path + ": unsupported trace version " + std::to_string(version));
    if (kind.rfind("kind=", 0) != 0) throw ConfigError("", path + ": missing kind");
    t.kind = kind.substr(5);
  }
  if (!std::getline(in, line)) throw ConfigError("", path + ": missing column header");
  {
    std::istringstream cols(line);
    for (std::string c; std::getline(cols, c, ',');) t.columns.push_back(c);
  }
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    for (std::string c; std::getline(cells, c, ',');) {
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size())
        throw ConfigError("", path + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      row.push_back(v);
    }
    if (row.size() != t.columns.size())
      throw ConfigError("", path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                                " cells");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace stackelberg::experiment
