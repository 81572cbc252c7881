#include "qpert/oneparticle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace qpert {

namespace {

CMatrix realize_all(const RenormOperator& op, const std::vector<Collection>& family) {
  const auto dim = static_cast<Eigen::Index>(op.space().full().dim());
  CMatrix v(dim, static_cast<Eigen::Index>(family.size()));
  for (std::size_t i = 0; i < family.size(); ++i) v.col(static_cast<Eigen::Index>(i)) = op.realize(family[i]);
  return v;
}

Collection remainder_of(const Collection& c, const ClusterSpace& space, int x) {
  Collection w;
  w.add(space.w_at(x));
  Collection r = c - w;
  for (auto it = r.entries.begin(); it != r.entries.end();)
    it = it->second.norm() < kPruneThreshold ? r.entries.erase(it) : std::next(it);
  return r;
}

}  // namespace

Collection project_w(const RenormOperator& op, int x, const ProjectionOptions& opt) {
  if (x < 0 || x >= op.space().volume().size()) throw ModelError("project_w: site outside the volume");
  Collection c;
  c.add(op.space().w_at(x));
  return op.project(c, opt.contour, opt.resolvent, opt.threads);
}

CMatrix gram_matrix(const RenormOperator& op, const std::vector<Collection>& family) {
  const CMatrix v = realize_all(op, family);
  CMatrix g = v.adjoint() * v / op.omega_norm2();
  return 0.5 * (g + g.adjoint());
}

CMatrix inverse_sqrt(const CMatrix& g) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
  const RVector& ev = es.eigenvalues();
  if (ev.size() == 0) return g;
  if (!(ev(0) > 1e-12 * std::max(1.0, std::abs(ev(ev.size() - 1)))))
    throw Error("Gram matrix is not positive definite (window too close to the boundary or lambda too large)");
  const RVector s = ev.cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * s.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<Collection> orthonormalize(const std::vector<Collection>& family, const CMatrix& g) {
  const CMatrix c = inverse_sqrt(g);
  std::vector<Collection> out(family.size());
  for (std::size_t x = 0; x < family.size(); ++x) {
    for (std::size_t y = 0; y < family.size(); ++y) {
      const Complex cyx = c(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
      if (std::abs(cyx) < 1e-300) continue;
      out[x] += cyx * family[y];
    }
    for (auto it = out[x].entries.begin(); it != out[x].entries.end();)
      it = it->second.norm() < kPruneThreshold ? out[x].entries.erase(it) : std::next(it);
  }
  return out;
}

std::vector<int> default_window(const Volume& volume, int margin) {
  int first = volume.site(0)[0], last = first;
  for (const auto& c : volume.sites()) first = std::min(first, c[0]), last = std::max(last, c[0]);
  std::vector<int> w;
  for (int s = 0; s < volume.size(); ++s) {
    const int x = volume.site(s)[0];
    if (volume.boundary() == Boundary::periodic || (x - first >= margin && last - x >= margin))
      w.push_back(s);
  }
  if (w.empty()) throw ModelError("default_window: no bulk site at the requested margin");
  return w;
}

OneParticleBasis build_basis(const RenormOperator& op, const std::vector<int>& window,
                             const ProjectionOptions& opt) {
  if (window.empty()) throw Error("build_basis: empty window");
  const auto& space = op.space();
  const auto& vol = space.volume();
  OneParticleBasis b;
  b.window = window;
  if (vol.boundary() == Boundary::periodic) {
    const Collection p0 = project_w(op, window[0], opt);
    for (int s : window) {
      const Coord off = vol.displacement(window[0], s);
      b.projected.push_back(shift_collection(p0, space, off));
    }
  } else {
    for (int s : window) b.projected.push_back(project_w(op, s, opt));
  }
  b.gram = gram_matrix(op, b.projected);
  b.xi = orthonormalize(b.projected, b.gram);

  const int x0 = window[0];
  const Collection rem = remainder_of(b.projected[0], space, x0);
  b.remainder_norm = triple_norm(rem);
  b.remainder_epsilon =
      fit_epsilon([&](double e) { return anchored_weighted_norm(rem, space, x0, e, true); });
  const Collection xrem = remainder_of(b.xi[0], space, x0);
  b.xi_remainder_norm = triple_norm(xrem);
  b.xi_remainder_epsilon =
      fit_epsilon([&](double e) { return anchored_weighted_norm(xrem, space, x0, e, true); });
  return b;
}

Hoppings hopping_amplitudes(const RenormOperator& op, const OneParticleBasis& basis, int center) {
  const auto& vol = op.space().volume();
  const auto it = std::find(basis.window.begin(), basis.window.end(), center);
  if (it == basis.window.end()) throw Error("hopping_amplitudes: center outside the window");
  const auto ic = static_cast<std::size_t>(it - basis.window.begin());
  const CVector xi0 = op.realize(basis.xi[ic]);

  std::map<int, Complex> by_y;
  for (std::size_t s = 0; s < basis.window.size(); ++s) {
    const int y = vol.displacement(center, basis.window[s])[0];
    const CVector hy = op.realize(op.apply(basis.xi[s]));
    by_y[y] = hy.dot(xi0) / op.omega_norm2();
  }
  Hoppings h;
  std::vector<double> xs, ys;
  for (const auto& [y, t] : by_y) {
    h.y.push_back(y);
    h.t.push_back(t);
    auto mirror = by_y.find(-y);
    if (mirror != by_y.end())
      h.hermitian_defect = std::max(h.hermitian_defect, std::abs(t - std::conj(mirror->second)));
    if (y != 0 && std::abs(t) > 1e-12) {
      xs.push_back(std::abs(y));
      ys.push_back(std::log(std::abs(t)));
    }
  }
  if (xs.size() >= 2) {
    const auto f = linear_fit(xs, ys);
    h.slope = f[0];
    h.intercept = f[1];
    h.r2 = f[2];
  }
  return h;
}

Dispersion::Dispersion(const Hoppings& h, int ring_length) {
  for (std::size_t i = 0; i < h.y.size(); ++i) {
    const int y = h.y[i];
    if (ring_length > 0 && ring_length % 2 == 0 && std::abs(y) == ring_length / 2) {
      terms_.emplace_back(static_cast<double>(y), 0.5 * h.t[i]);
      terms_.emplace_back(static_cast<double>(-y), 0.5 * h.t[i]);
    } else {
      terms_.emplace_back(static_cast<double>(y), h.t[i]);
    }
  }
}

Complex Dispersion::value(double p) const {
  Complex s{};
  for (const auto& [y, t] : terms_) s += t * std::polar(1.0, 2.0 * std::numbers::pi * y * p);
  return s;
}

double Dispersion::derivative(double p) const {
  Complex s{};
  for (const auto& [y, t] : terms_)
    s += Complex{0.0, 2.0 * std::numbers::pi * y} * t * std::polar(1.0, 2.0 * std::numbers::pi * y * p);
  return s.real();
}

double Dispersion::velocity(double p) const { return -derivative(p) / (2.0 * std::numbers::pi); }

std::vector<DispersionSample> sample_dispersion(const Dispersion& m, int n, double imag_tol) {
  if (n < 1) throw Error("sample_dispersion: grid size must be positive");
  std::vector<DispersionSample> out;
  for (int j = 0; j < n; ++j) {
    const double p = static_cast<double>(j) / n;
    const Complex v = m.value(p);
    if (std::abs(v.imag()) > imag_tol) throw Error("non-Hermitian hopping data");
    out.push_back({p, v.real(), m.derivative(p), m.velocity(p)});
  }
  return out;
}

Expansion expand_one_particle(const RenormOperator& op, const OneParticleBasis& basis,
                              const ClusterVector& u, const ProjectionOptions& opt) {
  Collection c;
  c.add(u);
  const CVector b = op.realize(op.project(c, opt.contour, opt.resolvent, opt.threads));
  const CMatrix v = realize_all(op, basis.xi);
  const double n2 = op.omega_norm2();
  const CMatrix g = v.adjoint() * v / n2;
  const CVector r = v.adjoint() * b / n2;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
  const RVector& ev = es.eigenvalues();
  if (!(ev(0) > 1e-10 * ev(ev.size() - 1))) throw Error("expand_one_particle: ill-conditioned basis");
  Expansion e;
  e.coefficients = es.eigenvectors() * (es.eigenvectors().adjoint() * r).cwiseQuotient(ev.cast<Complex>());
  e.residual = (b - v * e.coefficients).norm() / std::sqrt(n2);
  e.l1 = e.coefficients.cwiseAbs().sum();
  return e;
}

}  // namespace qpert
