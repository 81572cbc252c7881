#pragma once

#include <utility>
#include <vector>

#include "qpert/renorm.hpp"

namespace qpert {

struct ProjectionOptions {
  Contour contour;
  ResolventOptions resolvent;
  int threads = 1;
};

/// P w_x-hat Omega-tilde as a collection.
Collection project_w(const RenormOperator& op, int x, const ProjectionOptions& opt);

/// G_xy = <c_x, c_y> in the ground frame.
CMatrix gram_matrix(const RenormOperator& op, const std::vector<Collection>& family);

/// G^{-1/2} by eigendecomposition; throws Error unless G is positive definite.
CMatrix inverse_sqrt(const CMatrix& g);

/// xi_x = sum_y (G^{-1/2})_{yx} c_y.
std::vector<Collection> orthonormalize(const std::vector<Collection>& family, const CMatrix& g);

struct OneParticleBasis {
  std::vector<int> window;
  std::vector<Collection> projected;
  CMatrix gram;
  std::vector<Collection> xi;
  double remainder_norm = 0.0;   // triple norm of P w_0-hat minus w_0, at the first window site
  double remainder_epsilon = 1.0;  // smallest eps with the anchored weighted bound <= 1
  double xi_remainder_norm = 0.0;  // same two measures for xi minus w, first window site
  double xi_remainder_epsilon = 1.0;
};

/// Projects, orthonormalizes and measures the family over `window`.  On
/// periodic volumes one projection is computed and translated.
OneParticleBasis build_basis(const RenormOperator& op, const std::vector<int>& window,
                             const ProjectionOptions& opt);

/// Every site of the volume (periodic) or the bulk sites at least `margin`
/// away from both ends of axis 0 (open).
std::vector<int> default_window(const Volume& volume, int margin);

struct Hoppings {
  std::vector<int> y;               // displacement along axis 0
  std::vector<Complex> t;           // t(y) = <H-tilde xi_{x0+y}, xi_{x0}>
  double hermitian_defect = 0.0;    // max |t(y) - conj t(-y)| over symmetric pairs
  double slope = 0.0, intercept = 0.0, r2 = 0.0;  // log|t| against |y| for |y| >= 1
};

/// Hopping amplitudes relative to the basis element at `center` (1D volumes).
Hoppings hopping_amplitudes(const RenormOperator& op, const OneParticleBasis& basis, int center);

/// m(p) = sum_y t(y) e^{2 pi i y p} (1D).  On a ring of even length the
/// antipodal amplitude is split evenly between +N/2 and -N/2.
class Dispersion {
 public:
  Dispersion() = default;
  Dispersion(const Hoppings& h, int ring_length = 0);
  Dispersion(std::vector<std::pair<double, Complex>> terms) : terms_(std::move(terms)) {}
  static Dispersion constant(double mu) { return Dispersion({{0.0, Complex{mu, 0.0}}}); }

  Complex value(double p) const;
  double operator()(double p) const { return value(p).real(); }
  /// dm/dp.
  double derivative(double p) const;
  /// Packet group velocity -m'(p)/(2 pi) for amplitudes sum_p Vf(p) e^{-2 pi i x p}.
  double velocity(double p) const;
  const std::vector<std::pair<double, Complex>>& terms() const { return terms_; }

 private:
  std::vector<std::pair<double, Complex>> terms_;
};

struct DispersionSample {
  double p = 0.0;
  double m = 0.0;
  double dm_dp = 0.0;
  double velocity = 0.0;
};

/// Samples on p = j/n; throws "non-Hermitian hopping data" if |Im m| > imag_tol.
std::vector<DispersionSample> sample_dispersion(const Dispersion& m, int n, double imag_tol = 1e-8);

struct Expansion {
  CVector coefficients;  // over basis.window
  double residual = 0.0;
  double l1 = 0.0;
};

/// Least-squares coefficients of P u-hat Omega-tilde in the xi family.
Expansion expand_one_particle(const RenormOperator& op, const OneParticleBasis& basis,
                              const ClusterVector& u, const ProjectionOptions& opt);

}  // namespace qpert
