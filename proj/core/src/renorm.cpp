#include "qpert/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace qpert {

RenormOperator::RenormOperator(GroundFrame frame, const Hamiltonian& ham, double lambda, double c2)
    : frame_(std::move(frame)), phi_(ham.perturbation), lambda_(lambda), c2_(c2) {
  if (!frame_.space) throw Error("RenormOperator: frame without cluster space");
  if (static_cast<std::size_t>(phi_.rows()) != space().full().dim())
    throw Error("RenormOperator: Hamiltonian and frame disagree on dimension");
  omega_ = exp_apply(frame_.gs, space());
  omega_norm2_ = omega_.squaredNorm();
  phi_omega_ = phi_ * omega_;
}

Collection RenormOperator::diagonal(const Collection& c) const { return diagonal_apply(c, space()); }

Collection RenormOperator::f_apply(const Collection& c, double* dropped) const {
  const CVector x = realize(c);
  CVector y = phi_ * x - creation_sum_apply(c, phi_omega_, space());
  exp_apply_inplace(frame_.gs, y, space(), -1.0);
  Collection out = from_vector(y, space());
  const double lost = truncate(out, space());
  if (dropped) *dropped = lost;
  return out;
}

Collection RenormOperator::f_map(const ClusterVector& u, double* dropped) const {
  Collection c;
  c.add(u);
  return f_apply(c, dropped);
}

Collection RenormOperator::apply(const Collection& c, double* dropped) const {
  Collection out = f_apply(c, dropped);
  out += diagonal(c);
  return out;
}

std::vector<double> RenormOperator::free_levels_upto(double cutoff) const {
  return free_levels(space().local_energies(), space().volume().size(), cutoff);
}

void RenormOperator::check_admissible(Complex z) const {
  const double shrink = std::max(1e-3, 1.0 - c2_ * lambda_);
  for (double a : free_levels_upto((std::abs(z) + 1.0) / shrink)) {
    if (std::abs(z - a) <= c2_ * lambda_ * a || std::abs(z - a) < 1e-12) {
      std::ostringstream os;
      os << "z = " << z.real() << (z.imag() < 0 ? "" : "+") << z.imag()
         << "i lies in the forbidden disk around free level " << a << " (radius c2*lambda*a = "
         << c2_ * lambda_ * a << ")";
      throw AdmissibilityError(os.str());
    }
  }
}

void RenormOperator::check_contour(const Contour& ct) const {
  if (ct.nodes < 1 || !(ct.radius > 0)) throw AdmissibilityError("contour needs radius > 0 and nodes >= 1");
  const double shrink = std::max(1e-3, 1.0 - c2_ * lambda_);
  for (double a : free_levels_upto((ct.center + ct.radius + 1.0) / shrink)) {
    const double rad = c2_ * lambda_ * a;
    const double dist = std::abs(a - ct.center);
    const bool ok = dist < 1e-9 ? rad < ct.radius : dist - rad > ct.radius;
    if (!ok) {
      std::ostringstream os;
      os << "contour (center " << ct.center << ", radius " << ct.radius
         << ") meets the forbidden disk around free level " << a << " (radius " << rad << ")";
      throw AdmissibilityError(os.str());
    }
  }
}

ResolventResult RenormOperator::resolvent(const Collection& c, Complex z,
                                          const ResolventOptions& opt) const {
  if (opt.k_max < 0) throw Error("resolvent: k_max must be >= 0");
  check_admissible(z);
  auto r0 = [&](const Collection& x) {
    Collection out;
    out.scalar = x.scalar / (0.0 - z);
    for (const auto& [m, a] : x.entries) {
      const RVector e = space().cluster_energies(m);
      CVector v(a.size());
      for (Eigen::Index i = 0; i < a.size(); ++i) v(i) = a(i) / (e(i) - z);
      out.entries.emplace(m, std::move(v));
    }
    return out;
  };
  ResolventResult res;
  Collection term = r0(c);
  res.value = term;
  res.term_norms.push_back(triple_norm(term));
  int growth = 0;
  for (int k = 1; k <= opt.k_max; ++k) {
    if (res.term_norms.back() < opt.early_stop) break;
    term = r0(f_apply(term));
    term *= -1.0;
    const double tn = triple_norm(term);
    growth = tn >= res.term_norms.back() ? growth + 1 : 0;
    res.term_norms.push_back(tn);
    if (growth >= opt.divergence_run) throw ConvergenceError("resolvent series diverges");
    res.value += term;
  }
  res.last_term = res.term_norms.back();
  return res;
}

Collection RenormOperator::project(const Collection& c, const Contour& ct,
                                   const ResolventOptions& opt, int threads) const {
  check_contour(ct);
  const int n = ct.nodes;
  std::vector<Collection> parts(n);
  std::vector<std::exception_ptr> errs(n);
  auto work = [&](int j) {
    try {
      const double th = 2.0 * std::numbers::pi * j / n;
      const Complex e{std::cos(th), std::sin(th)};
      Collection r = resolvent(c, ct.center + ct.radius * e, opt).value;
      r *= -(ct.radius / n) * e;
      parts[j] = std::move(r);
    } catch (...) {
      errs[j] = std::current_exception();
    }
  };
  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    for (int j = 0; j < n; ++j) work(j);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int j = t; j < n; j += threads) work(j);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  Collection sum;
  for (const auto& p : parts) sum += p;
  truncate(sum, space());
  return sum;
}

CVector RenormOperator::realize(const Collection& c) const {
  return reconstruct(c, frame_.gs, space());
}

Complex RenormOperator::inner(const Collection& a, const Collection& b) const {
  return realize(a).dot(realize(b)) / omega_norm2_;
}

Contour default_contour(const Model& model) {
  Contour c;
  c.center = model.mu();
  c.radius = 0.4 * model.mu_gap();
  c.nodes = 32;
  return c;
}

LocalizationReport localization_fit(const std::vector<double>& shifted_eigs,
                                    const RVector& local_energies, int nsites, double lambda) {
  LocalizationReport rep;
  const double top = shifted_eigs.empty() ? 0.0 : shifted_eigs.back();
  const auto levels = free_levels(local_energies, nsites, 2.0 * std::abs(top) + 2.0);
  rep.gap = std::numeric_limits<double>::infinity();
  for (double e : shifted_eigs) {
    double best = std::numeric_limits<double>::infinity(), at = 0.0;
    for (double a : levels) {
      double d;
      if (a == 0.0)
        d = std::abs(e) < 1e-9 ? 0.0 : std::numeric_limits<double>::infinity();
      else if (lambda > 0)
        d = std::abs(e - a) / (lambda * a);
      else
        d = std::abs(e - a) < 1e-9 ? 0.0 : std::numeric_limits<double>::infinity();
      if (d < best) {
        best = d;
        at = a;
      }
    }
    rep.distance.push_back(best);
    rep.nearest.push_back(at);
    rep.c2 = std::max(rep.c2, best);
    if (std::abs(e) >= 1e-9) rep.gap = std::min(rep.gap, e);
  }
  return rep;
}

}  // namespace qpert
