#include "qpert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

namespace qpert {

Eigenpairs dense_spectrum(const SparseMatrix& h, bool with_vectors) {
  if (h.rows() > (1 << 13)) throw CapacityError("dense_spectrum: dimension above 2^13");
  const CMatrix dense = CMatrix(h);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(dense, with_vectors ? Eigen::ComputeEigenvectors
                                                                 : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense_spectrum: eigensolver failed");
  Eigenpairs out;
  out.values = es.eigenvalues();
  if (with_vectors) out.vectors = es.eigenvectors();
  return out;
}

namespace {

CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex{g(rng), g(rng)};
  return v;
}

void orthogonalize(CVector& w, const std::vector<CVector>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) w -= q * q.dot(w);
}

}  // namespace

Eigenpairs extremal_eigs(const SparseMatrix& h, int k, const LanczosOptions& opt) {
  const Eigen::Index n = h.rows();
  require_capacity(static_cast<std::size_t>(n), "extremal_eigs");
  if (k < 1 || k > n) throw Error("extremal_eigs: k out of range");
  std::mt19937_64 rng(opt.seed);
  const auto cap = static_cast<Eigen::Index>(
      std::max<std::size_t>(20, opt.basis_bytes / (sizeof(Complex) * static_cast<std::size_t>(n))));

  std::vector<CVector> locked;
  std::vector<double> locked_vals;
  CVector start = random_vector(n, rng);
  for (int restart = 0; restart < opt.max_restarts && static_cast<int>(locked.size()) < k;
       ++restart) {
    orthogonalize(start, locked);
    if (start.norm() < 1e-12) start = random_vector(n, rng), orthogonalize(start, locked);
    const Eigen::Index room = n - static_cast<Eigen::Index>(locked.size());
    const Eigen::Index m = std::min<Eigen::Index>({static_cast<Eigen::Index>(opt.krylov), cap, room});

    std::vector<CVector> q;
    std::vector<double> alpha, beta;
    q.push_back(start.normalized());
    double last_beta = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      CVector w = h * q[j];
      const double a = q[j].dot(w).real();
      alpha.push_back(a);
      w -= a * q[j];
      if (j > 0) w -= beta[j - 1] * q[j - 1];
      orthogonalize(w, locked);
      orthogonalize(w, q);
      const double b = w.norm();
      last_beta = b;
      if (j + 1 == m || b < 1e-12) break;
      beta.push_back(b);
      q.push_back(w / b);
    }
    const auto msz = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(msz, msz);
    for (Eigen::Index i = 0; i < msz; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < msz) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const int need = k - static_cast<int>(locked.size());
    auto ritz = [&](Eigen::Index i) {
      CVector y = CVector::Zero(n);
      for (Eigen::Index j = 0; j < msz; ++j) y += es.eigenvectors()(j, i) * q[j];
      return y;
    };
    Eigen::Index i = 0;
    for (; i < msz && static_cast<int>(locked.size()) < k; ++i) {
      const double est = std::abs(last_beta * es.eigenvectors()(msz - 1, i));
      if (est > opt.tol) break;
      CVector y = ritz(i).normalized();
      const double theta = y.dot(h * y).real();
      if ((h * y - theta * y).norm() > opt.tol) break;
      locked.push_back(std::move(y));
      locked_vals.push_back(theta);
    }
    start = CVector::Zero(n);
    for (Eigen::Index r = i; r < std::min<Eigen::Index>(msz, i + need); ++r) start += ritz(r);
    if (start.norm() < 1e-12) start = random_vector(n, rng);
  }
  if (static_cast<int>(locked.size()) < k)
    throw ConvergenceError("extremal_eigs: Lanczos did not converge");

  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return locked_vals[a] < locked_vals[b]; });
  Eigenpairs out;
  out.values.resize(k);
  out.vectors.resize(n, k);
  for (int i = 0; i < k; ++i) {
    out.values(i) = locked_vals[order[i]];
    out.vectors.col(i) = locked[order[i]];
  }
  return out;
}

std::pair<double, double> spectral_bounds(const SparseMatrix& h, int steps, std::uint64_t seed) {
  const Eigen::Index n = h.rows();
  std::mt19937_64 rng(seed);
  CVector q = random_vector(n, rng).normalized(), prev = CVector::Zero(n);
  std::vector<double> alpha, beta;
  double b_prev = 0.0, last_beta = 0.0;
  for (int j = 0; j < std::min<Eigen::Index>(steps, n); ++j) {
    CVector w = h * q;
    const double a = q.dot(w).real();
    w -= a * q + b_prev * prev;
    alpha.push_back(a);
    const double b = w.norm();
    last_beta = b;
    if (b < 1e-12 || j + 1 == std::min<Eigen::Index>(steps, n)) break;
    beta.push_back(b);
    prev = q;
    q = w / b;
    b_prev = b;
  }
  const auto m = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(m - 1);
  const double rlo = std::abs(last_beta * es.eigenvectors()(m - 1, 0));
  const double rhi = std::abs(last_beta * es.eigenvectors()(m - 1, m - 1));
  const double margin = 0.01 * (hi - lo) + 1e-3;
  return {lo - rlo - margin, hi + rhi + margin};
}

std::vector<double> BandResult::lowest() const {
  std::vector<double> out;
  for (const auto& s : sectors)
    out.push_back(s.energies.empty() ? std::numeric_limits<double>::quiet_NaN() : s.energies.front());
  return out;
}

std::size_t BandResult::count() const {
  std::size_t c = 0;
  for (const auto& s : sectors) c += s.energies.size();
  return c;
}

std::size_t translate_state(std::size_t state, int d, int n) {
  std::size_t top = 1;
  for (int k = 0; k < n - 1; ++k) top *= static_cast<std::size_t>(d);
  return (state % top) * d + state / top;
}

BandResult momentum_band(const Volume& volume, const Model& model, double lo, double hi) {
  if (volume.boundary() != Boundary::periodic || volume.nu() != 1)
    throw ModelError("momentum_band: needs a periodic chain");
  const int n = volume.size();
  const int d = model.dim();
  const Hamiltonian ham = assemble_hamiltonian(volume, model);
  const auto dim = ham.space.dim();

  // representative (smallest image) and shift l with T^l rep = state
  std::vector<std::size_t> rep(dim);
  std::vector<int> shift(dim), period(dim);
  for (std::size_t s = 0; s < dim; ++s) {
    std::size_t t = s, best = s;
    int r0 = 0, p = 0;
    for (int r = 1; r <= n; ++r) {
      t = translate_state(t, d, n);
      if (t < best) best = t, r0 = r;
      if (t == s && p == 0) p = r;
    }
    rep[s] = best;
    shift[s] = (n - r0) % n;
    period[s] = p;
  }
  std::vector<std::size_t> reps;
  for (std::size_t s = 0; s < dim; ++s)
    if (rep[s] == s) reps.push_back(s);

  std::vector<std::vector<double>> all(n);
  double ground = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    const double q = 2.0 * std::numbers::pi * j / n;
    std::vector<std::size_t> basis;
    for (auto s : reps)
      if ((static_cast<long>(j) * period[s]) % n == 0) basis.push_back(s);
    if (basis.empty()) continue;
    std::vector<long> pos(dim, -1);
    for (std::size_t i = 0; i < basis.size(); ++i) pos[basis[i]] = static_cast<long>(i);
    const auto b = static_cast<Eigen::Index>(basis.size());
    CMatrix blk = CMatrix::Zero(b, b);
    for (Eigen::Index c = 0; c < b; ++c) {
      const auto s = static_cast<Eigen::Index>(basis[c]);
      for (SparseMatrix::InnerIterator it(ham.full, s); it; ++it) {
        const auto t = static_cast<std::size_t>(it.row());
        const long r = pos[rep[t]];
        if (r < 0) continue;
        const double ratio = std::sqrt(static_cast<double>(period[basis[c]]) / period[rep[t]]);
        blk(r, c) += it.value() * std::polar(1.0, q * shift[t]) * ratio;
      }
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(blk, Eigen::EigenvaluesOnly);
    all[j].assign(es.eigenvalues().data(), es.eigenvalues().data() + b);
    ground = std::min(ground, all[j].front());
  }
  BandResult out;
  out.ground = ground;
  for (int j = 0; j < n; ++j) {
    SectorLevels sl;
    sl.j = j;
    for (double e : all[j])
      if (e - ground >= lo && e - ground <= hi) sl.energies.push_back(e - ground);
    out.sectors.push_back(std::move(sl));
  }
  if (out.count() == 0) throw Error("momentum_band: window contains no eigenvalue");
  return out;
}

CVector evolve_reference(const SparseMatrix& h, const CVector& v, double t,
                         std::pair<double, double> bounds, double tol) {
  require_capacity(static_cast<std::size_t>(h.rows()), "evolve_reference");
  if (t == 0.0) return v;
  const double c = 0.5 * (bounds.first + bounds.second);
  const double half = 0.5 * (bounds.second - bounds.first);
  if (!(half > 0)) throw Error("evolve_reference: empty spectral interval");
  // keep each Chebyshev leg short enough for accurate Bessel values
  const int legs = static_cast<int>(std::ceil(std::abs(t) * half / 200.0));
  const double dt = t / legs;
  const double tau = std::abs(dt) * half;
  const double sgn = dt < 0 ? -1.0 : 1.0;
  std::vector<double> jk;
  for (int k = 0;; ++k) {
    const double val = std::cyl_bessel_j(static_cast<double>(k), tau);
    jk.push_back(val);
    if (k > tau + 10 && std::abs(val) < tol) break;
    if (k > 100000) throw ConvergenceError("evolve_reference: Chebyshev series too long");
  }
  const double norm0 = v.norm();
  CVector x = v;
  for (int leg = 0; leg < legs; ++leg) {
    auto hs = [&](const CVector& u) -> CVector { return (h * u - c * u) / half; };
    CVector p0 = x, p1 = hs(x);
    CVector out = jk[0] * p0;
    Complex phase{0.0, -sgn};  // (-i sgn)^k
    out += 2.0 * phase * jk[1] * p1;
    for (std::size_t k = 2; k < jk.size(); ++k) {
      CVector p2 = 2.0 * hs(p1) - p0;
      phase *= Complex{0.0, -sgn};
      out += 2.0 * phase * jk[k] * p2;
      p0 = std::move(p1);
      p1 = std::move(p2);
    }
    x = std::polar(1.0, -c * dt) * out;
  }
  if (std::abs(x.norm() - norm0) > 1e-8 * std::max(1.0, norm0))
    throw ConvergenceError("evolve_reference: norm drift, spectral interval too narrow");
  return x;
}

CVector evolve_reference(const SparseMatrix& h, const CVector& v, double t) {
  return evolve_reference(h, v, t, spectral_bounds(h));
}

}  // namespace qpert
