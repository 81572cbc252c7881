#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "qpert/config.hpp"

namespace qpert::cli {

struct RunContext {
  Config cfg;
  std::filesystem::path out = ".";
  int threads = 1;
  std::uint64_t seed = 0x5eed;
  std::string command;
};

/// Shortest round-trip decimal form; identical inputs give identical text.
std::string fmt(double v);
std::string fmt(int v);
std::string fmt(std::size_t v);

using Meta = std::vector<std::pair<std::string, std::string>>;

/// Comma-separated file with a `#` header: command, config hash, extra
/// metadata, then the config echo.  The first non-comment line is the column row.
class CsvFile {
 public:
  CsvFile(const RunContext& ctx, const std::string& name, const Meta& meta,
          const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream os_;
  std::size_t ncols_;
};

/// Acceptance checks of one command, written to `checks_<command>.csv` and echoed to stdout.
class Checks {
 public:
  void add(const std::string& name, double value, const std::string& relation, double threshold);
  void add_flag(const std::string& name, bool pass, const std::string& detail = "");
  bool all_pass() const;
  /// Writes the file and returns 0 when every check passed, 2 otherwise.
  int finish(const RunContext& ctx) const;

 private:
  struct Row {
    std::string name, value, relation, threshold;
    bool pass;
  };
  std::vector<Row> rows_;
};

/// Reads the data rows of a CsvFile (comments and the column row skipped).
std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path,
                                                    std::vector<std::string>* columns = nullptr);
/// Value of a `# key = value` header line, empty when absent.
std::string read_csv_meta(const std::filesystem::path& path, const std::string& key);

}  // namespace qpert::cli
