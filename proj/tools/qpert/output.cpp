#include "output.hpp"

#include <charconv>
#include <cmath>
#include <iostream>
#include <sstream>

namespace qpert::cli {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

namespace {

std::string hex(std::uint64_t h) {
  std::ostringstream ss;
  ss << "0x" << std::hex << h;
  return ss.str();
}

}  // namespace

CsvFile::CsvFile(const RunContext& ctx, const std::string& name, const Meta& meta,
                 const std::vector<std::string>& columns)
    : path_(ctx.out / name), ncols_(columns.size()) {
  std::filesystem::create_directories(ctx.out);
  os_.open(path_);
  if (!os_) throw Error("cannot write '" + path_.string() + "'");
  os_ << "# command = " << ctx.command << "\n";
  os_ << "# config_hash = " << hex(ctx.cfg.hash()) << "\n";
  for (const auto& [k, v] : meta) os_ << "# " << k << " = " << v << "\n";
  std::istringstream echo(ctx.cfg.echo());
  for (std::string line; std::getline(echo, line);) os_ << "# config: " << line << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
  os_ << "\n";
}

void CsvFile::row(const std::vector<std::string>& cells) {
  if (cells.size() != ncols_) throw Error("internal: row width mismatch in " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
  os_ << "\n";
}

void Checks::add(const std::string& name, double value, const std::string& relation, double threshold) {
  bool pass = false;
  if (relation == "<=") pass = value <= threshold;
  else if (relation == ">=") pass = value >= threshold;
  else if (relation == "<") pass = value < threshold;
  else if (relation == ">") pass = value > threshold;
  else throw Error("internal: unknown relation " + relation);
  rows_.push_back({name, fmt(value), relation, fmt(threshold), pass});
}

void Checks::add_flag(const std::string& name, bool pass, const std::string& detail) {
  rows_.push_back({name, detail.empty() ? (pass ? "true" : "false") : detail, "is", "true", pass});
}

bool Checks::all_pass() const {
  for (const auto& r : rows_)
    if (!r.pass) return false;
  return true;
}

int Checks::finish(const RunContext& ctx) const {
  CsvFile f(ctx, "checks_" + ctx.command + ".csv", {}, {"check", "value", "relation", "threshold", "pass"});
  for (const auto& r : rows_) {
    f.row({r.name, r.value, r.relation, r.threshold, r.pass ? "pass" : "FAIL"});
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.value << " " << r.relation << " "
              << r.threshold << "\n";
  }
  return all_pass() ? 0 : 2;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path,
                                                    std::vector<std::string>* columns) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::vector<std::vector<std::string>> rows;
  bool header_seen = false;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (!header_seen) {
      header_seen = true;
      if (columns) *columns = cells;
      continue;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string read_csv_meta(const std::filesystem::path& path, const std::string& key) {
  std::ifstream in(path);
  const std::string prefix = "# " + key + " = ";
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] != '#') break;
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  }
  return "";
}

}  // namespace qpert::cli
