#include "qpert/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace qpert {

std::size_t max_full_dimension() {
  if (const char* env = std::getenv("QPERT_MAX_DIM")) {
    char* end = nullptr;
    auto v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::size_t{1} << 20;
}

void require_capacity(std::size_t dim, const std::string& what) {
  const auto ceiling = max_full_dimension();
  if (dim > ceiling) {
    std::ostringstream os;
    os << what << ": dimension " << dim << " exceeds the memory ceiling " << ceiling
       << " (set QPERT_MAX_DIM to override)";
    throw CapacityError(os.str());
  }
}

std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "open") return Boundary::open;
  if (s == "periodic") return Boundary::periodic;
  throw ModelError("unknown boundary '" + s + "' (expected open or periodic)");
}

// ---------------------------------------------------------------------------
// Volume

Volume::Volume(int nu, std::vector<Coord> sites, Boundary boundary, Coord extent)
    : nu_(nu), sites_(std::move(sites)), boundary_(boundary), extent_(extent) {
  if (nu_ < 1 || nu_ > kMaxDim) throw ModelError("spatial dimension must be 1..3");
  if (sites_.empty()) throw ModelError("volume has no sites");
  if (static_cast<int>(sites_.size()) > kMaxSites)
    throw CapacityError("volume exceeds 64 sites");
  for (auto& s : sites_)
    for (int a = nu_; a < kMaxDim; ++a) s[a] = 0;

  for (int a = 0; a < kMaxDim; ++a) {
    int lo = 0, hi = 0;
    if (a < nu_) {
      lo = hi = sites_[0][a];
      for (const auto& s : sites_) {
        lo = std::min(lo, s[a]);
        hi = std::max(hi, s[a]);
      }
    }
    lo_[a] = lo;
    span_[a] = hi - lo + 1;
  }
  std::size_t cells = 1;
  for (int a = 0; a < kMaxDim; ++a) cells *= static_cast<std::size_t>(span_[a]);
  lookup_.assign(cells, -1);
  for (int k = 0; k < size(); ++k) {
    const auto& s = sites_[k];
    std::size_t idx = 0;
    for (int a = kMaxDim - 1; a >= 0; --a) idx = idx * span_[a] + (s[a] - lo_[a]);
    if (lookup_[idx] != -1) throw ModelError("volume sites must be distinct");
    lookup_[idx] = k;
  }

  if (boundary_ == Boundary::periodic) {
    std::size_t box = 1;
    for (int a = 0; a < nu_; ++a) {
      if (extent_[a] < 1) throw ModelError("periodic volume needs positive extents");
      if (span_[a] != extent_[a] || lo_[a] != 0)
        throw ModelError("periodic volume must be a full box starting at the origin");
      box *= static_cast<std::size_t>(extent_[a]);
    }
    if (box != sites_.size()) throw ModelError("periodic volume must be a full box");
  }
}

Volume Volume::chain(int n, Boundary boundary) { return box({n}, boundary); }

Volume Volume::box(const std::vector<int>& extents, Boundary boundary) {
  const int nu = static_cast<int>(extents.size());
  if (nu < 1 || nu > kMaxDim) throw ModelError("box needs 1..3 extents");
  Coord ext{1, 1, 1};
  std::size_t total = 1;
  for (int a = 0; a < nu; ++a) {
    if (extents[a] < 1) throw ModelError("box extents must be positive");
    ext[a] = extents[a];
    total *= static_cast<std::size_t>(extents[a]);
  }
  if (total > static_cast<std::size_t>(kMaxSites)) throw CapacityError("volume exceeds 64 sites");
  std::vector<Coord> sites;
  // first axis varies fastest
  for (int z = 0; z < ext[2]; ++z)
    for (int y = 0; y < ext[1]; ++y)
      for (int x = 0; x < ext[0]; ++x) sites.push_back({x, y, z});
  for (int a = nu; a < kMaxDim; ++a) ext[a] = 1;
  return Volume(nu, std::move(sites), boundary, ext);
}

SiteMask Volume::all_sites() const {
  return size() == 64 ? ~SiteMask{0} : ((SiteMask{1} << size()) - 1);
}

Coord Volume::wrap(Coord c) const {
  if (boundary_ == Boundary::periodic) {
    for (int a = 0; a < nu_; ++a) {
      c[a] %= extent_[a];
      if (c[a] < 0) c[a] += extent_[a];
    }
  }
  return c;
}

std::optional<int> Volume::index_of(const Coord& raw) const {
  Coord c = wrap(raw);
  std::size_t idx = 0;
  for (int a = kMaxDim - 1; a >= 0; --a) {
    const int rel = (a < nu_ ? c[a] : 0) - lo_[a];
    if (rel < 0 || rel >= span_[a]) return std::nullopt;
    idx = idx * span_[a] + rel;
  }
  const int k = lookup_[idx];
  if (k < 0) return std::nullopt;
  return k;
}

std::optional<int> Volume::shifted(int k, const Coord& offset) const {
  Coord c = sites_[k];
  for (int a = 0; a < nu_; ++a) c[a] += offset[a];
  return index_of(c);
}

std::optional<SiteMask> Volume::shifted_mask(SiteMask mask, const Coord& offset) const {
  SiteMask out = 0;
  while (mask) {
    const int k = lowest_site(mask);
    mask &= mask - 1;
    auto t = shifted(k, offset);
    if (!t) return std::nullopt;
    out |= SiteMask{1} << *t;
  }
  return out;
}

Coord Volume::displacement(int a, int b) const {
  Coord d{0, 0, 0};
  for (int ax = 0; ax < nu_; ++ax) {
    int delta = sites_[b][ax] - sites_[a][ax];
    if (boundary_ == Boundary::periodic) {
      const int L = extent_[ax];
      delta %= L;
      if (delta < 0) delta += L;
      if (delta > L / 2) delta -= L;
    }
    d[ax] = delta;
  }
  return d;
}

int Volume::distance(int a, int b) const {
  const Coord d = displacement(a, b);
  int s = 0;
  for (int ax = 0; ax < nu_; ++ax) s += std::abs(d[ax]);
  return s;
}

// ---------------------------------------------------------------------------
// Model validation

CMatrix kron_power(const CMatrix& u, int n) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (int k = 0; k < n; ++k) {
    // new factor is more significant: out_new = u (x) out
    CMatrix next(out.rows() * u.rows(), out.cols() * u.cols());
    for (int i = 0; i < u.rows(); ++i)
      for (int j = 0; j < u.cols(); ++j)
        next.block(i * out.rows(), j * out.cols(), out.rows(), out.cols()) = u(i, j) * out;
    out = std::move(next);
  }
  return out;
}

namespace {

double hermitian_defect(const CMatrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

// Sums of k >= 2 nonzero levels (with repetition) up to cutoff.
void collect_sums(const std::vector<double>& levels, std::size_t start, int count, double acc,
                  double cutoff, std::vector<double>& out) {
  for (std::size_t i = start; i < levels.size(); ++i) {
    const double s = acc + levels[i];
    if (s > cutoff + 1e-12) break;
    if (count + 1 >= 2) out.push_back(s);
    collect_sums(levels, i, count + 1, s, cutoff, out);
  }
}

}  // namespace

ValidationReport validate_model(const LocalSite& site, const PerturbationTemplate& pert,
                                double isolation_margin) {
  ValidationReport r;
  const int d = site.dim;
  if (d < 2 || site.h.rows() != d || site.h.cols() != d)
    throw ModelError("local Hamiltonian must be a square matrix of size dim >= 2");
  if (site.omega_index < 0 || site.omega_index >= d)
    throw ModelError("omega_index out of range");
  const int nsites = static_cast<int>(pert.offsets.size());
  if (nsites < 1) throw ModelError("perturbation needs at least one offset");
  const Eigen::Index pd = static_cast<Eigen::Index>(std::llround(std::pow(d, nsites)));
  if (pert.phi.rows() != pd || pert.phi.cols() != pd)
    throw ModelError("perturbation matrix dimension does not match dim^|offsets|");

  r.symmetry_defect = hermitian_defect(site.h);
  if (r.symmetry_defect > 1e-12) {
    r.hermitian = false;
    std::ostringstream os;
    os << "local Hamiltonian not Hermitian (defect " << r.symmetry_defect << ")";
    r.failures.push_back(os.str());
  }
  r.pert_defect = hermitian_defect(pert.phi);
  if (r.pert_defect > 1e-12) {
    r.pert_hermitian = false;
    std::ostringstream os;
    os << "perturbation not Hermitian (defect " << r.pert_defect << ")";
    r.failures.push_back(os.str());
  }
  r.strength = pert.phi.size() ? Eigen::JacobiSVD<CMatrix>(pert.phi).singularValues()(0) : 0.0;
  if (std::abs(r.strength - pert.strength) > 1e-9 * std::max(1.0, r.strength)) {
    std::ostringstream os;
    os << "declared strength " << pert.strength << " differs from operator norm " << r.strength;
    r.failures.push_back(os.str());
  }

  r.ground_residual = site.h.col(site.omega_index).norm();
  if (r.ground_residual != 0.0) {
    r.ground_ok = false;
    r.failures.push_back("h * Omega != 0");
  }

  // spectrum on the complement of Omega
  CMatrix hh = 0.5 * (site.h + site.h.adjoint());
  std::vector<int> rest;
  for (int i = 0; i < d; ++i)
    if (i != site.omega_index) rest.push_back(i);
  CMatrix sub(d - 1, d - 1);
  for (int i = 0; i < d - 1; ++i)
    for (int j = 0; j < d - 1; ++j) sub(i, j) = hh(rest[i], rest[j]);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sub);
  const RVector ev = es.eigenvalues();
  r.gap = ev(0);
  if (r.gap < 1.0 - 1e-12) {
    r.gap_ok = false;
    r.failures.push_back("gap < 1");
  }

  // w must be a unit eigenvector for mu, orthogonal to Omega
  if (site.w.size() != d) {
    r.mu_eigen_ok = false;
    r.failures.push_back("w has wrong dimension");
  } else {
    const double res = (site.h * site.w - site.mu * site.w).norm();
    const double nrm = site.w.norm();
    const double ov = std::abs(site.w(site.omega_index));
    if (res > 1e-10 || std::abs(nrm - 1.0) > 1e-10 || ov > 1e-10) {
      r.mu_eigen_ok = false;
      r.failures.push_back("w is not a unit eigenvector of h for mu orthogonal to Omega");
    }
  }
  int mult = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i) - site.mu) < 1e-9) ++mult;
  if (mult != 1) {
    r.mu_nondegenerate = false;
    r.failures.push_back("mu is not a non-degenerate eigenvalue");
  }

  std::vector<double> levels(ev.data(), ev.data() + ev.size());
  std::vector<double> sums;
  collect_sums(levels, 0, 0, 0.0, site.mu + isolation_margin, sums);
  r.mu_isolation = std::numeric_limits<double>::infinity();
  for (double s : sums) r.mu_isolation = std::min(r.mu_isolation, std::abs(s - site.mu));
  if (r.mu_isolation < 1e-9) {
    r.mu_isolated = false;
    r.failures.push_back("mu equals sum of nonzero eigenvalues");
  }
  return r;
}

std::pair<LocalSite, PerturbationTemplate> preset_tfi(double lambda, int nu) {
  if (!(lambda >= 0.0)) throw ModelError("TFI preset needs lambda >= 0");
  if (nu < 1 || nu > kMaxDim) throw ModelError("spatial dimension must be 1..3");
  LocalSite s;
  s.dim = 2;
  s.h = CMatrix::Zero(2, 2);
  s.h(1, 1) = 1.0;
  s.omega_index = 0;
  s.mu = 1.0;
  s.w = CVector::Zero(2);
  s.w(1) = 1.0;

  PerturbationTemplate p;
  p.offsets = {Coord{0, 0, 0}, Coord{1, 0, 0}};
  CMatrix sx(2, 2);
  sx << 0, 1, 1, 0;
  p.phi = -lambda * kron_power(sx, 2);
  p.strength = lambda;
  return {s, p};
}

// ---------------------------------------------------------------------------
// Model

namespace {

void fix_phase(CMatrix& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    v.col(j).cwiseAbs().maxCoeff(&imax);
    const Complex c = v(imax, j);
    v.col(j) *= std::conj(c) / std::abs(c);
  }
}

}  // namespace

Model::Model(LocalSite site, PerturbationTemplate pert, double isolation_margin)
    : site_(std::move(site)), pert_(std::move(pert)) {
  const auto report = validate_model(site_, pert_, isolation_margin);
  if (!report.pass()) {
    std::string msg = "model rejected:";
    for (const auto& f : report.failures) msg += " [" + f + "]";
    throw ModelError(msg);
  }
  const int d = site_.dim;
  std::vector<int> rest;
  for (int i = 0; i < d; ++i)
    if (i != site_.omega_index) rest.push_back(i);

  CMatrix hh = 0.5 * (site_.h + site_.h.adjoint());
  CMatrix sub(d - 1, d - 1);
  for (int i = 0; i < d - 1; ++i)
    for (int j = 0; j < d - 1; ++j) sub(i, j) = hh(rest[i], rest[j]);

  basis_ = CMatrix::Zero(d, d);
  energies_ = RVector::Zero(d);
  basis_(site_.omega_index, 0) = 1.0;

  const bool diagonal = (sub - CMatrix(sub.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  std::vector<std::pair<double, int>> order;
  CMatrix vecs;
  RVector vals;
  if (diagonal) {
    vals = sub.diagonal().real();
    vecs = CMatrix::Identity(d - 1, d - 1);
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(sub);
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
    fix_phase(vecs);
  }
  for (int i = 0; i < d - 1; ++i) order.emplace_back(vals(i), i);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (int k = 0; k < d - 1; ++k) {
    const int src = order[k].second;
    energies_(k + 1) = order[k].first;
    for (int i = 0; i < d - 1; ++i) basis_(rest[i], k + 1) = vecs(i, src);
  }

  // identify w among the excited eigenvectors and align its phase with the given w
  double best = 0.0;
  for (int k = 1; k < d; ++k) {
    const double ov = std::abs(basis_.col(k).dot(site_.w));
    if (ov > best) {
      best = ov;
      w_index_ = k;
    }
  }
  const Complex ph = basis_.col(w_index_).dot(site_.w);
  basis_.col(w_index_) *= ph / std::abs(ph);
  energies_(w_index_) = site_.mu;

  phi_eigen_ = to_eigenbasis(pert_.phi, static_cast<int>(pert_.offsets.size()));
}

CMatrix Model::to_eigenbasis(const CMatrix& op, int nsites) const {
  const CMatrix u = kron_power(basis_, nsites);
  return u.adjoint() * op * u;
}

double Model::mu_gap() const {
  // distance from mu to the nearest other free level (0 or sums of levels)
  const auto lv = free_levels(energies_, 4, site_.mu + 4.0);
  double g = std::numeric_limits<double>::infinity();
  for (double a : lv)
    if (std::abs(a - site_.mu) > 1e-9) g = std::min(g, std::abs(a - site_.mu));
  return g;
}

std::vector<double> free_levels(const RVector& local_energies, int max_sites, double cutoff) {
  std::vector<double> nonzero;
  for (int i = 0; i < local_energies.size(); ++i)
    if (local_energies(i) > 0) nonzero.push_back(local_energies(i));
  std::sort(nonzero.begin(), nonzero.end());
  nonzero.erase(std::unique(nonzero.begin(), nonzero.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                nonzero.end());
  auto dedup = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-10; }),
            v.end());
  };
  std::vector<double> v{0.0};
  std::vector<double> layer{0.0};
  for (int k = 0; k < max_sites && !layer.empty(); ++k) {
    std::vector<double> next;
    for (double acc : layer)
      for (double e : nonzero)
        if (acc + e <= cutoff + 1e-12) next.push_back(acc + e);
    dedup(next);
    if (next.size() > 100000) throw CapacityError("too many free levels below cutoff");
    v.insert(v.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  dedup(v);
  return v;
}

}  // namespace qpert
