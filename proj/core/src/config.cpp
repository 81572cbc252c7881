#include "qpert/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace qpert {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

double to_double(const std::string& key, const std::string& tok) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != tok.size()) throw Error("config: key '" + key + "': '" + tok + "' is not a number");
  return v;
}

}  // namespace

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::vector<std::string>& Config::known_keys() {
  static const std::vector<std::string> keys = {
      "nu", "sites", "box", "boundary", "preset", "lambda",
      "local.h", "local.omega_index", "local.mu_index",
      "pert.offsets", "pert.phi", "pert.scale", "validate.margin",
      "trunc.k_max", "trunc.d_max",
      "gs.tol", "gs.max_iter", "gs.damping",
      "renorm.c2", "contour.center", "contour.radius", "contour.nodes",
      "resolvent.k_max", "resolvent.early_stop",
      "dispersion.grid", "dispersion.window_margin", "hoppings.center",
      "spectrum.k",
      "ed.k", "ed.window", "ed.site", "ed.times",
      "scatter.basis_sites", "scatter.grid", "scatter.p1", "scatter.p2", "scatter.p3",
      "scatter.centers", "scatter.profile", "scatter.smoothness", "scatter.times",
      "scatter.cook_ratio", "scatter.iso_tol", "scatter.propagate",
      "cone.window", "cone.grid", "cone.profile", "cone.smoothness", "cone.factor", "cone.times",
      "cone.power"};
  return keys;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  const std::set<std::string> known(known_keys().begin(), known_keys().end());
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const int start = lineno;
    std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(origin + ":" + std::to_string(start) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    auto depth = [](const std::string& v) {
      return std::count(v.begin(), v.end(), '[') - std::count(v.begin(), v.end(), ']');
    };
    while (depth(value) > 0 && std::getline(is, line)) {
      ++lineno;
      value += " " + trim(strip_comment(line));
    }
    if (depth(value) != 0) throw Error(origin + ":" + std::to_string(start) + ": unbalanced brackets");
    if (key.empty() || value.empty())
      throw Error(origin + ":" + std::to_string(start) + ": empty key or value");
    if (!known.count(key)) throw Error(origin + ":" + std::to_string(start) + ": unknown key '" + key + "'");
    if (cfg.values_.count(key))
      throw Error(origin + ":" + std::to_string(start) + ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::set(const std::string& key, const std::string& value) {
  const auto& k = known_keys();
  if (std::find(k.begin(), k.end(), key) == k.end()) throw Error("unknown key '" + key + "'");
  values_[key] = value;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

std::string Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error("config: missing key '" + key + "'");
  return unquote(it->second);
}

double Config::num(const std::string& key, double fallback) const {
  return has(key) ? num(key) : fallback;
}

double Config::num(const std::string& key) const { return to_double(key, str(key)); }

int Config::integer(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double v = num(key);
  if (v != std::floor(v)) throw Error("config: key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

bool Config::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config: key '" + key + "' must be true or false");
}

std::vector<std::string> split_list(const std::string& value) {
  std::string flat;
  for (char c : value)
    if (c != '[' && c != ']') flat += c;
  std::vector<std::string> out;
  std::string tok;
  std::istringstream ss(flat);
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<double> Config::list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& t : split_list(str(key))) out.push_back(to_double(key, t));
  return out;
}

std::vector<double> Config::list(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? list(key) : fallback;
}

std::vector<Complex> Config::complex_list(const std::string& key) const {
  std::vector<Complex> out;
  for (const auto& t : split_list(str(key))) {
    try {
      out.push_back(parse_complex(t));
    } catch (const Error& e) {
      throw Error("config: key '" + key + "': " + e.what());
    }
  }
  return out;
}

std::string Config::echo() const {
  std::string s;
  for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
  return s;
}

std::uint64_t Config::hash() const { return fnv1a(echo()); }

Complex parse_complex(const std::string& token) {
  std::string t;
  for (char c : token)
    if (c != ' ') t += c;
  if (t.empty()) throw Error("empty complex literal");
  auto number = [&](const std::string& s) { return to_double("complex", s); };
  const char last = t.back();
  if (last != 'i' && last != 'j') return {number(t), 0.0};
  t.pop_back();
  std::size_t split = std::string::npos;
  for (std::size_t i = t.size(); i-- > 1;)
    if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
      split = i;
      break;
    }
  const std::string re = split == std::string::npos ? "" : t.substr(0, split);
  std::string im = split == std::string::npos ? t : t.substr(split);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  return {re.empty() ? 0.0 : number(re), number(im)};
}

namespace {

CMatrix square_matrix(const std::vector<Complex>& v, const std::string& key) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (n * n != static_cast<Eigen::Index>(v.size()) || n == 0)
    throw ModelError("config: '" + key + "' needs a square number of entries");
  CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = v[static_cast<std::size_t>(i * n + j)];
  return m;
}

}  // namespace

std::pair<LocalSite, PerturbationTemplate> build_model_parts(const Config& cfg) {
  const int nu = cfg.integer("nu", 1);
  if (nu < 1 || nu > kMaxDim) throw ModelError("config: nu must be 1, 2 or 3");
  if (cfg.has("preset")) {
    if (cfg.str("preset") != "tfi") throw ModelError("config: unknown preset '" + cfg.str("preset") + "'");
    for (const char* k : {"local.h", "local.omega_index", "local.mu_index", "pert.offsets", "pert.phi", "pert.scale"})
      if (cfg.has(k)) throw ModelError(std::string("config: '") + k + "' conflicts with preset");
    return preset_tfi(cfg.num("lambda"), nu);
  }
  // an explicit model takes its strength from pert.phi; a stray lambda would be ignored
  if (cfg.has("lambda")) throw ModelError("config: 'lambda' is only used with a preset; scale pert.phi instead");
  LocalSite site;
  site.h = square_matrix(cfg.complex_list("local.h"), "local.h");
  site.dim = static_cast<int>(site.h.rows());
  site.omega_index = cfg.integer("local.omega_index", 0);
  if (site.omega_index < 0 || site.omega_index >= site.dim)
    throw ModelError("config: local.omega_index out of range");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (site.h + site.h.adjoint()));
  const int mu_index = cfg.integer("local.mu_index", 1);
  if (mu_index < 1 || mu_index >= site.dim) throw ModelError("config: local.mu_index out of range");
  site.mu = es.eigenvalues()(mu_index);
  site.w = es.eigenvectors().col(mu_index);

  PerturbationTemplate pert;
  const auto offs = cfg.list("pert.offsets");
  if (offs.empty() || offs.size() % nu != 0)
    throw ModelError("config: pert.offsets needs a multiple of nu coordinates");
  for (std::size_t i = 0; i < offs.size(); i += nu) {
    Coord c{0, 0, 0};
    for (int a = 0; a < nu; ++a) c[a] = static_cast<int>(offs[i + a]);
    pert.offsets.push_back(c);
  }
  pert.phi = cfg.num("pert.scale", 1.0) * square_matrix(cfg.complex_list("pert.phi"), "pert.phi");
  Eigen::Index expect = 1;
  for (std::size_t k = 0; k < pert.offsets.size(); ++k) expect *= site.dim;
  if (pert.phi.rows() != expect)
    throw ModelError("config: pert.phi dimension must be dim^(number of offsets)");
  pert.strength = Eigen::JacobiSVD<CMatrix>(pert.phi).singularValues()(0);
  return {site, pert};
}

Model build_model(const Config& cfg) {
  auto [site, pert] = build_model_parts(cfg);
  return Model(std::move(site), std::move(pert), cfg.num("validate.margin", 2.0));
}

Volume build_volume(const Config& cfg) {
  const int nu = cfg.integer("nu", 1);
  const Boundary b = boundary_from_string(cfg.str("boundary", "open"));
  if (cfg.has("box")) {
    std::vector<int> ext;
    for (double v : cfg.list("box")) ext.push_back(static_cast<int>(v));
    if (static_cast<int>(ext.size()) != nu) throw ModelError("config: box needs nu extents");
    return Volume::box(ext, b);
  }
  const auto s = cfg.list("sites");
  if (s.size() == 1 && nu == 1) return Volume::chain(static_cast<int>(s[0]), b);
  if (s.empty() || s.size() % nu != 0) throw ModelError("config: sites needs a multiple of nu coordinates");
  if (b == Boundary::periodic) throw ModelError("config: periodic volumes must be given as box");
  std::vector<Coord> pts;
  for (std::size_t i = 0; i < s.size(); i += nu) {
    Coord c{0, 0, 0};
    for (int a = 0; a < nu; ++a) c[a] = static_cast<int>(s[i + a]);
    pts.push_back(c);
  }
  return Volume(nu, pts, b, Coord{0, 0, 0});
}

Truncation build_truncation(const Config& cfg) {
  Truncation t;
  t.k_max = cfg.integer("trunc.k_max", t.k_max);
  t.d_max = cfg.integer("trunc.d_max", t.d_max);
  return t;
}

GroundStateOptions build_gs_options(const Config& cfg) {
  GroundStateOptions o;
  o.tol = cfg.num("gs.tol", o.tol);
  o.max_iter = cfg.integer("gs.max_iter", o.max_iter);
  o.damping = cfg.num("gs.damping", o.damping);
  return o;
}

ResolventOptions build_resolvent_options(const Config& cfg) {
  ResolventOptions o;
  o.k_max = cfg.integer("resolvent.k_max", o.k_max);
  o.early_stop = cfg.num("resolvent.early_stop", o.early_stop);
  return o;
}

Contour build_contour(const Config& cfg, const Model& model) {
  Contour c = default_contour(model);
  c.center = cfg.num("contour.center", c.center);
  c.radius = cfg.num("contour.radius", c.radius);
  c.nodes = cfg.integer("contour.nodes", c.nodes);
  return c;
}

}  // namespace qpert
