#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qpert/groundstate.hpp"
#include "qpert/renorm.hpp"

namespace qpert {

/// Strict `key = value` configuration.  `#` starts a comment; lists are
/// written `[a, b, ...]` (nesting is flattened); complex numbers as `a+bi`;
/// strings may be quoted.  Unknown keys and duplicates are rejected.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string str(const std::string& key, const std::string& fallback) const;
  std::string str(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  double num(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> list(const std::string& key) const;
  std::vector<double> list(const std::string& key, std::vector<double> fallback) const;
  std::vector<Complex> complex_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

  /// Canonical `key = value` lines in key order.
  std::string echo() const;
  /// FNV-1a 64-bit hash of echo().
  std::uint64_t hash() const;
  const std::map<std::string, std::string>& values() const { return values_; }

  static const std::vector<std::string>& known_keys();

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
};

Complex parse_complex(const std::string& token);
std::vector<std::string> split_list(const std::string& value);

/// LocalSite and PerturbationTemplate from either `preset = tfi` or explicit local./pert. keys.
std::pair<LocalSite, PerturbationTemplate> build_model_parts(const Config& cfg);
Model build_model(const Config& cfg);
/// Volume from `nu`, `sites` (chain length or flat coordinate list) or `box`, and `boundary`.
Volume build_volume(const Config& cfg);
Truncation build_truncation(const Config& cfg);
GroundStateOptions build_gs_options(const Config& cfg);
ResolventOptions build_resolvent_options(const Config& cfg);
/// Contour around mu; radius defaults to 0.4 times the gap to the nearest other free level.
Contour build_contour(const Config& cfg, const Model& model);

std::uint64_t fnv1a(const std::string& s);

}  // namespace qpert
