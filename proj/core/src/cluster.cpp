#include "qpert/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace qpert {

// ---------------------------------------------------------------------------
// Collection arithmetic

void Collection::add(SiteMask mask, const CVector& amps) {
  if (mask == 0) {
    scalar += amps.size() ? amps(0) : Complex{};
    return;
  }
  auto [it, inserted] = entries.try_emplace(mask, amps);
  if (!inserted) it->second += amps;
}

Collection& Collection::operator+=(const Collection& o) {
  scalar += o.scalar;
  for (const auto& [m, a] : o.entries) add(m, a);
  return *this;
}

Collection& Collection::operator-=(const Collection& o) {
  scalar -= o.scalar;
  for (const auto& [m, a] : o.entries) add(m, -a);
  return *this;
}

Collection& Collection::operator*=(Complex a) {
  scalar *= a;
  for (auto& [m, v] : entries) v *= a;
  return *this;
}

Collection operator+(Collection a, const Collection& b) { return a += b; }
Collection operator-(Collection a, const Collection& b) { return a -= b; }
Collection operator*(Complex a, Collection c) { return c *= a; }

// ---------------------------------------------------------------------------
// ClusterSpace

ClusterSpace::ClusterSpace(Volume volume, const Model& model, Truncation trunc)
    : volume_(std::move(volume)),
      metric_(volume_),
      trunc_(trunc),
      d_(model.dim()),
      energies_(model.energies()),
      w_index_(model.w_index()) {
  if (trunc_.k_max < 1 || trunc_.d_max < 0) throw ModelError("invalid truncation bounds");
  if (volume_.size() * std::log2(static_cast<double>(d_)) <= 40)
    full_.emplace(d_, volume_.size());
}

std::shared_ptr<const ClusterSpace> ClusterSpace::create(Volume volume, const Model& model,
                                                         Truncation trunc) {
  return std::make_shared<const ClusterSpace>(std::move(volume), model, trunc);
}

const ProductSpace& ClusterSpace::full() const {
  if (!full_) throw CapacityError("full space of this volume is not representable");
  require_capacity(full_->dim(), "full-space vector");
  return *full_;
}

std::size_t ClusterSpace::amplitude_count(SiteMask mask) const {
  std::size_t n = 1;
  for (int k = 0; k < popcount(mask); ++k) n *= static_cast<std::size_t>(d_ - 1);
  return n;
}

bool ClusterSpace::admits(SiteMask mask) const {
  if (mask == 0) return true;
  if (popcount(mask) > trunc_.k_max) return false;
  return metric_.connect(mask) <= trunc_.d_max;
}

RVector ClusterSpace::cluster_energies(SiteMask mask) const {
  const auto n = amplitude_count(mask);
  const int k = popcount(mask);
  RVector out(static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t rem = a;
    double e = 0.0;
    for (int j = 0; j < k; ++j) {
      e += energies_(static_cast<Eigen::Index>(rem % (d_ - 1) + 1));
      rem /= (d_ - 1);
    }
    out(static_cast<Eigen::Index>(a)) = e;
  }
  return out;
}

ClusterVector ClusterSpace::w_at(int site) const {
  ClusterVector u;
  u.support = SiteMask{1} << site;
  u.amplitudes = CVector::Zero(d_ - 1);
  u.amplitudes(w_index_ - 1) = 1.0;
  return u;
}

// ---------------------------------------------------------------------------
// Collection-level algebra

double truncate(Collection& c, const ClusterSpace& space) {
  double dropped = 0.0;
  for (auto it = c.entries.begin(); it != c.entries.end();) {
    const double n = it->second.norm();
    if (n < kPruneThreshold) {
      it = c.entries.erase(it);
    } else if (!space.admits(it->first)) {
      dropped += n;
      it = c.entries.erase(it);
    } else {
      ++it;
    }
  }
  return dropped;
}

namespace {

std::vector<int> sites_of(SiteMask m) {
  std::vector<int> s;
  for (; m; m &= m - 1) s.push_back(lowest_site(m));
  return s;
}

// Digits (0-based excited index) per site of `mask` for amplitude index a.
void decode(std::size_t a, int count, int base, std::vector<int>& out) {
  out.resize(count);
  for (int j = 0; j < count; ++j) {
    out[j] = static_cast<int>(a % base);
    a /= base;
  }
}

}  // namespace

std::optional<ClusterVector> creation_product(const ClusterVector& u, const ClusterVector& v,
                                              int local_dim) {
  if (u.support & v.support) return std::nullopt;
  const int b = local_dim - 1;
  const SiteMask joint = u.support | v.support;
  const auto su = sites_of(u.support), sv = sites_of(v.support), sj = sites_of(joint);
  std::vector<int> pos_u(su.size()), pos_v(sv.size());
  for (std::size_t i = 0; i < su.size(); ++i)
    pos_u[i] = static_cast<int>(std::find(sj.begin(), sj.end(), su[i]) - sj.begin());
  for (std::size_t i = 0; i < sv.size(); ++i)
    pos_v[i] = static_cast<int>(std::find(sj.begin(), sj.end(), sv[i]) - sj.begin());
  std::vector<std::size_t> pw(sj.size() + 1, 1);
  for (std::size_t i = 0; i < sj.size(); ++i) pw[i + 1] = pw[i] * b;

  ClusterVector out;
  out.support = joint;
  out.amplitudes = CVector::Zero(static_cast<Eigen::Index>(pw[sj.size()]));
  std::vector<int> du, dv;
  for (Eigen::Index a = 0; a < u.amplitudes.size(); ++a) {
    decode(static_cast<std::size_t>(a), static_cast<int>(su.size()), b, du);
    std::size_t ia = 0;
    for (std::size_t i = 0; i < su.size(); ++i) ia += du[i] * pw[pos_u[i]];
    for (Eigen::Index c = 0; c < v.amplitudes.size(); ++c) {
      decode(static_cast<std::size_t>(c), static_cast<int>(sv.size()), b, dv);
      std::size_t idx = ia;
      for (std::size_t i = 0; i < sv.size(); ++i) idx += dv[i] * pw[pos_v[i]];
      out.amplitudes(static_cast<Eigen::Index>(idx)) = u.amplitudes(a) * v.amplitudes(c);
    }
  }
  return out;
}

double triple_norm(const Collection& c) {
  double s = std::abs(c.scalar);
  for (const auto& [m, a] : c.entries) s += a.norm();
  return s;
}

double weighted_norm(const Collection& c, const ClusterSpace& space, double eps, bool h0) {
  std::vector<double> acc(space.volume().size(), 0.0);
  for (const auto& [m, a] : c.entries) {
    const double n = h0 ? space.cluster_energies(m).cwiseProduct(a).norm() : a.norm();
    const double w = n * std::pow(eps, -(space.metric().connect(m) + 1));
    for (SiteMask r = m; r; r &= r - 1) acc[lowest_site(r)] += w;
  }
  return acc.empty() ? 0.0 : *std::max_element(acc.begin(), acc.end());
}

double anchored_weighted_norm(const Collection& c, const ClusterSpace& space, int x, double eps,
                              bool h0) {
  const SiteMask xm = SiteMask{1} << x;
  double s = 0.0;
  for (const auto& [m, a] : c.entries) {
    const double n = h0 ? space.cluster_energies(m).cwiseProduct(a).norm() : a.norm();
    s += n * std::pow(eps, -(space.metric().connect(m | xm) + 1));
  }
  return s;
}

double fit_epsilon(const std::function<double(double)>& norm_fn) {
  double hi = 1.0 - 1e-12;
  if (norm_fn(hi) > 1.0) return 1.0;
  double lo = 1e-8;
  if (norm_fn(lo) <= 1.0) return lo;
  for (int it = 0; it < 80; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (norm_fn(mid) <= 1.0)
      hi = mid;
    else
      lo = mid;
    if (hi / lo < 1 + 1e-10) break;
  }
  return hi;
}

Collection diagonal_apply(const Collection& c, const ClusterSpace& space) {
  Collection out;
  for (const auto& [m, a] : c.entries) out.entries.emplace(m, space.cluster_energies(m).cwiseProduct(a));
  return out;
}

Collection remap_collection(const Collection& c, const ClusterSpace& dst,
                            const std::function<std::optional<int>(int)>& site_map,
                            double* dropped) {
  Collection out;
  out.scalar = c.scalar;
  double lost = 0.0;
  const int b = dst.local_dim() - 1;
  std::vector<int> dg;
  for (const auto& [m, a] : c.entries) {
    const auto src = sites_of(m);
    std::vector<int> tgt;
    bool ok = true;
    for (int s : src) {
      auto t = site_map(s);
      if (!t) {
        ok = false;
        break;
      }
      tgt.push_back(*t);
    }
    SiteMask nm = 0;
    for (int t : tgt) nm |= SiteMask{1} << t;
    if (!ok || popcount(nm) != static_cast<int>(tgt.size())) {
      lost += a.norm();
      continue;
    }
    const auto sorted = sites_of(nm);
    std::vector<std::size_t> pw(sorted.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      const auto pos = std::find(sorted.begin(), sorted.end(), tgt[i]) - sorted.begin();
      std::size_t p = 1;
      for (int q = 0; q < pos; ++q) p *= b;
      pw[i] = p;
    }
    CVector na(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      decode(static_cast<std::size_t>(i), static_cast<int>(src.size()), b, dg);
      std::size_t idx = 0;
      for (std::size_t j = 0; j < src.size(); ++j) idx += dg[j] * pw[j];
      na(static_cast<Eigen::Index>(idx)) = a(i);
    }
    out.add(nm, na);
  }
  if (dropped) *dropped = lost;
  return out;
}

Collection shift_collection(const Collection& c, const ClusterSpace& space, const Coord& offset,
                            double* dropped) {
  const Volume& vol = space.volume();
  return remap_collection(
      c, space, [&](int s) { return vol.shifted(s, offset); }, dropped);
}

// ---------------------------------------------------------------------------
// Full-space realizations

CVector to_vector(const Collection& c, const ClusterSpace& space) {
  const auto& ps = space.full();
  CVector v = CVector::Zero(static_cast<Eigen::Index>(ps.dim()));
  v(0) = c.scalar;
  for (const auto& [m, a] : c.entries) {
    const auto off = ps.excited_offsets(m);
    for (std::size_t i = 0; i < off.size(); ++i) v(static_cast<Eigen::Index>(off[i])) += a(i);
  }
  return v;
}

Collection from_vector(const CVector& v, const ClusterSpace& space) {
  const auto& ps = space.full();
  Collection out;
  out.scalar = v(0);
  for (std::size_t s = 1; s < ps.dim(); ++s) {
    const Complex x = v(static_cast<Eigen::Index>(s));
    if (x == Complex{}) continue;
    const SiteMask m = ps.excited(s);
    auto it = out.entries.find(m);
    if (it == out.entries.end())
      it = out.entries
               .emplace(m, CVector::Zero(static_cast<Eigen::Index>(space.amplitude_count(m))))
               .first;
    it->second(static_cast<Eigen::Index>(ps.amplitude_index(s, m))) = x;
  }
  for (auto it = out.entries.begin(); it != out.entries.end();)
    it = it->second.norm() < kPruneThreshold ? out.entries.erase(it) : std::next(it);
  return out;
}

CVector creation_apply(const ClusterVector& u, const CVector& v, const ClusterSpace& space) {
  const auto& ps = space.full();
  for (SiteMask r = u.support; r; r &= r - 1)
    if (lowest_site(r) >= ps.sites()) throw ModelError("cluster support outside the volume");
  CVector out = CVector::Zero(v.size());
  const auto off = ps.excited_offsets(u.support);
  ps.for_each_base(u.support, [&](std::size_t base) {
    const Complex x = v(static_cast<Eigen::Index>(base));
    if (x == Complex{}) return;
    for (std::size_t i = 0; i < off.size(); ++i)
      out(static_cast<Eigen::Index>(base + off[i])) += u.amplitudes(i) * x;
  });
  return out;
}

CVector creation_sum_apply(const Collection& c, const CVector& v, const ClusterSpace& space) {
  const auto& ps = space.full();
  CVector out = c.scalar * v;
  for (const auto& [m, a] : c.entries) {
    const auto off = ps.excited_offsets(m);
    ps.for_each_base(m, [&](std::size_t base) {
      const Complex x = v(static_cast<Eigen::Index>(base));
      if (x == Complex{}) return;
      for (std::size_t i = 0; i < off.size(); ++i)
        out(static_cast<Eigen::Index>(base + off[i])) += a(i) * x;
    });
  }
  return out;
}

void exp_apply_inplace(const Collection& c, CVector& v, const ClusterSpace& space, double sign) {
  const auto& ps = space.full();
  for (const auto& [m, a] : c.entries) {
    const auto off = ps.excited_offsets(m);
    const CVector sa = sign * a;
    // bases have zero digits on m and are never written in this pass
    ps.for_each_base(m, [&](std::size_t base) {
      const Complex x = v(static_cast<Eigen::Index>(base));
      if (x == Complex{}) return;
      for (std::size_t i = 0; i < off.size(); ++i)
        v(static_cast<Eigen::Index>(base + off[i])) += sa(i) * x;
    });
  }
}

CVector exp_apply(const Collection& c, const ClusterSpace& space) {
  const auto& ps = space.full();
  CVector v = CVector::Zero(static_cast<Eigen::Index>(ps.dim()));
  v(0) = 1.0;
  exp_apply_inplace(c, v, space, +1.0);
  return v;
}

Collection exact_log(const CVector& raw, const ClusterSpace& space) {
  const auto& ps = space.full();
  if (std::abs(raw(0)) < 1e-300) throw Error("not normalizable to the exp ansatz");
  const CVector v = raw / raw(0);
  CVector L = CVector::Zero(v.size());
  for (std::size_t s = 1; s < ps.dim(); ++s) {
    const SiteMask S = ps.excited(s);
    const SiteMask low = S & (~S + 1);
    const SiteMask rest = S ^ low;
    Complex acc = v(static_cast<Eigen::Index>(s));
    if (rest) {
      // proper submasks J of S containing the lowest site
      for (SiteMask sub = (rest - 1) & rest;; sub = (sub - 1) & rest) {
        const SiteMask J = sub | low;
        const Complex lj = L(static_cast<Eigen::Index>(ps.keep(s, J)));
        if (lj != Complex{}) acc -= lj * v(static_cast<Eigen::Index>(ps.clear(s, J)));
        if (sub == 0) break;
      }
    }
    L(static_cast<Eigen::Index>(s)) = acc;
  }
  Collection out = from_vector(L, space);
  out.scalar = 0.0;
  return out;
}

Collection truncate_log(const CVector& v, const ClusterSpace& space) {
  Collection c = exact_log(v, space);
  truncate(c, space);
  return c;
}

Collection frame_components(const CVector& v, const Collection& gs, const ClusterSpace& space) {
  CVector y = v;
  exp_apply_inplace(gs, y, space, -1.0);
  Collection c = from_vector(y, space);
  truncate(c, space);
  return c;
}

CVector reconstruct(const Collection& c, const Collection& gs, const ClusterSpace& space) {
  CVector x = to_vector(c, space);
  exp_apply_inplace(gs, x, space, +1.0);
  return x;
}

// ---------------------------------------------------------------------------
// Serialization

void write_collection(std::ostream& os, const Collection& c) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  auto amps = [&](const CVector& a) {
    for (Eigen::Index i = 0; i < a.size(); ++i)
      os << (i ? " " : "") << '(' << a(i).real() << ',' << a(i).imag() << ')';
  };
  if (c.scalar != Complex{}) {
    os << "() : ";
    amps(CVector::Constant(1, c.scalar));
    os << '\n';
  }
  for (const auto& [m, a] : c.entries) {
    os << '(';
    bool first = true;
    for (SiteMask r = m; r; r &= r - 1) {
      os << (first ? "" : ",") << lowest_site(r);
      first = false;
    }
    os << ") : ";
    amps(a);
    os << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

Collection read_collection(std::istream& is) {
  Collection c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    const auto open = line.find('(');
    const auto close = line.find(')');
    if (colon == std::string::npos || open == std::string::npos || close == std::string::npos ||
        close > colon)
      throw Error("collection line " + std::to_string(lineno) + ": malformed");
    SiteMask mask = 0;
    std::string sites = line.substr(open + 1, close - open - 1);
    std::replace(sites.begin(), sites.end(), ',', ' ');
    std::istringstream ss(sites);
    int s;
    while (ss >> s) {
      if (s < 0 || s >= kMaxSites) throw Error("collection line " + std::to_string(lineno) + ": bad site");
      mask |= SiteMask{1} << s;
    }
    std::vector<Complex> vals;
    std::string rest = line.substr(colon + 1);
    std::size_t pos = 0;
    while ((pos = rest.find('(', pos)) != std::string::npos) {
      const auto end = rest.find(')', pos);
      if (end == std::string::npos) throw Error("collection line " + std::to_string(lineno) + ": unclosed amplitude");
      std::string pair = rest.substr(pos + 1, end - pos - 1);
      std::replace(pair.begin(), pair.end(), ',', ' ');
      std::istringstream ps(pair);
      double re = 0, im = 0;
      if (!(ps >> re >> im)) throw Error("collection line " + std::to_string(lineno) + ": bad amplitude");
      vals.emplace_back(re, im);
      pos = end + 1;
    }
    CVector a(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) a(static_cast<Eigen::Index>(i)) = vals[i];
    c.add(mask, a);
  }
  return c;
}

}  // namespace qpert
