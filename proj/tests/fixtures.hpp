#pragma once

#include <random>

#include "qpert/cluster.hpp"

namespace qpert::testing {

inline Model tfi(double lambda) {
  auto [s, p] = preset_tfi(lambda);
  return Model(std::move(s), std::move(p));
}

/// Three-level site h = diag(0, 1, 1.5), mu = 1, with a random Hermitian
/// nearest-neighbour perturbation of strength `lambda`.
inline Model qutrit(double lambda, unsigned seed = 1) {
  LocalSite s;
  s.dim = 3;
  s.h = CMatrix::Zero(3, 3);
  s.h(1, 1) = 1.0;
  s.h(2, 2) = 1.5;
  s.mu = 1.0;
  s.w = CVector::Unit(3, 1);
  PerturbationTemplate p;
  p.offsets = {Coord{0, 0, 0}, Coord{1, 0, 0}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CMatrix a(9, 9);
  for (auto& x : a.reshaped()) x = Complex(g(rng), g(rng));
  CMatrix herm = a + a.adjoint();
  const double n = Eigen::JacobiSVD<CMatrix>(herm).singularValues()(0);
  p.phi = lambda > 0 ? CMatrix(herm * (lambda / n)) : CMatrix(CMatrix::Zero(9, 9));
  p.strength = lambda;
  return Model(std::move(s), std::move(p));
}

inline CVector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g;
  CVector v(n);
  for (auto& x : v) x = scale * Complex(g(rng), g(rng));
  return v;
}

inline ClusterVector random_cluster(std::mt19937_64& rng, const ClusterSpace& space, SiteMask mask,
                                    double scale = 1.0) {
  return {mask, random_vector(rng, static_cast<Eigen::Index>(space.amplitude_count(mask)), scale)};
}

/// Collection with random amplitudes on every admitted cluster of at most `k` sites.
inline Collection random_collection(std::mt19937_64& rng, const ClusterSpace& space, int k, double scale) {
  Collection c;
  const int n = space.volume().size();
  for (SiteMask m = 1; m < (SiteMask{1} << n); ++m)
    if (popcount(m) <= k && space.admits(m)) c.add(random_cluster(rng, space, m, scale));
  return c;
}

inline double distance(const Collection& a, const Collection& b) {
  const Collection d = a - b;
  return triple_norm(d) + std::abs(d.scalar);
}

}  // namespace qpert::testing
