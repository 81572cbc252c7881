#include "qpert/groundstate.hpp"

#include <cmath>
#include <numeric>

namespace qpert {

FixedPointStep fixed_point_map(const Collection& c, const ClusterSpace& space,
                               const SparseMatrix& h, double damping) {
  const CVector psi = exp_apply(c, space);
  CVector y = h * psi;
  exp_apply_inplace(c, y, space, -1.0);
  Collection r = from_vector(y, space);

  FixedPointStep step;
  step.energy = r.scalar.real();
  step.dropped = truncate(r, space);
  step.next = c;
  for (const auto& [k, rk] : r.entries) {
    const RVector e = space.cluster_energies(k);
    const CVector delta = -damping * rk.cwiseQuotient(e.cast<Complex>());
    step.next.add(k, delta);
    step.update.add(k, delta);
  }
  for (auto it = step.next.entries.begin(); it != step.next.entries.end();)
    it = it->second.norm() < kPruneThreshold ? step.next.entries.erase(it) : std::next(it);
  return step;
}

GroundStateResult solve_ground_state(std::shared_ptr<const ClusterSpace> space,
                                     const SparseMatrix& h, const GroundStateOptions& opt) {
  if (!(opt.tol > 0)) throw Error("solve_ground_state: tol must be positive");
  if (static_cast<std::size_t>(h.rows()) != space->full().dim())
    throw Error("solve_ground_state: Hamiltonian and cluster space disagree on dimension");

  GroundStateResult res;
  res.frame.space = space;
  auto& d = res.diag;
  double damping = opt.damping;
  int growth = 0;
  Collection c;
  for (int it = 1;; ++it) {
    if (it > opt.max_iter)
      throw ConvergenceError("ground state: no convergence after " + std::to_string(opt.max_iter) +
                             " iterations");
    FixedPointStep step = fixed_point_map(c, *space, h, damping);
    // undamped correction size, so a shrinking damping cannot fake convergence
    const double un = triple_norm(step.update) / damping;
    d.energies.push_back(step.energy);
    if (!d.update_norms.empty()) {
      const double prev = d.update_norms.back();
      d.contraction_ratios.push_back(prev > 0 ? un / prev : 0.0);
      if (un > prev) {
        if (++growth >= 2) throw ConvergenceError("perturbation too strong");
        damping *= 0.5;
      } else {
        growth = 0;
      }
    }
    d.update_norms.push_back(un);
    c = std::move(step.next);
    res.frame.energy = step.energy;
    d.iterations = it;
    if (un < opt.tol) break;
  }
  // energy of the converged collection
  res.frame.energy = fixed_point_map(c, *space, h, 0.0).energy;
  res.frame.gs = std::move(c);
  d.final_damping = damping;
  const auto& gs = res.frame.gs;
  d.epsilon = fit_epsilon([&](double e) { return weighted_norm(gs, *space, e, true); });
  d.weighted_bound = weighted_norm(gs, *space, d.epsilon, true);
  res.frame.epsilon = d.epsilon;
  return res;
}

CVector ground_vector(const GroundFrame& frame) {
  CVector v = exp_apply(frame.gs, *frame.space);
  v.normalize();
  return v;
}

Complex connected_correlation(const ProductSpace& ps, const CVector& psi, const LocalOperator& a1,
                              const LocalOperator& a2) {
  const CVector x1 = apply_local(ps, psi, a1.sites, a1.op);
  const CVector x2 = apply_local(ps, psi, a2.sites, a2.op);
  const CVector x12 = apply_local(ps, x2, a1.sites, a1.op);
  return psi.dot(x12) - psi.dot(x1) * psi.dot(x2);
}

DecayScan decay_scan(const GroundFrame& frame, const CMatrix& op, int origin,
                     const std::vector<int>& separations) {
  const auto& space = *frame.space;
  const CVector psi = ground_vector(frame);
  DecayScan out;
  std::vector<double> xs, ys;
  for (int r : separations) {
    auto s = space.volume().shifted(origin, Coord{r, 0, 0});
    if (!s) throw ModelError("decay_scan: separation leaves the volume");
    const double c =
        std::abs(connected_correlation(space.full(), psi, {{origin}, op}, {{*s}, op}));
    out.separations.push_back(r);
    out.magnitudes.push_back(c);
    if (c > 0) {
      xs.push_back(r);
      ys.push_back(std::log(c));
    }
  }
  if (xs.size() >= 2) out.slope = linear_fit(xs, ys)[0];
  return out;
}

std::array<double, 3> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2 || x.size() != y.size()) throw Error("linear_fit: need two or more points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const double r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return {slope, my - slope * mx, r2};
}

}  // namespace qpert
