#pragma once

#include <vector>

#include "qpert/groundstate.hpp"
#include "qpert/hamiltonian.hpp"

namespace qpert {

/// Circle z = center + radius e^{i theta} sampled at `nodes` equispaced angles.
struct Contour {
  double center = 1.0;
  double radius = 0.4;
  int nodes = 32;
};

struct ResolventOptions {
  int k_max = 20;
  double early_stop = 1e-12;
  int divergence_run = 3;  // consecutive growing terms that count as divergence
};

struct ResolventResult {
  Collection value;
  std::vector<double> term_norms;
  double last_term = 0.0;
};

/// H-tilde = H-tilde_0 + Phi-tilde acting on collections in a ground frame.
/// Phi-tilde c = e^{-V}(Phi C - C Phi) Omega-tilde with C = c_0 + sum_I u_I-hat,
/// evaluated through exact full-space arithmetic and truncated afterwards.
class RenormOperator {
 public:
  RenormOperator(GroundFrame frame, const Hamiltonian& ham, double lambda, double c2);

  const GroundFrame& frame() const { return frame_; }
  const ClusterSpace& space() const { return *frame_.space; }
  double lambda() const { return lambda_; }
  double c2() const { return c2_; }
  const CVector& omega() const { return omega_; }  // exp_apply(gs), unnormalized
  double omega_norm2() const { return omega_norm2_; }

  Collection diagonal(const Collection& c) const;
  Collection f_apply(const Collection& c, double* dropped = nullptr) const;
  Collection f_map(const ClusterVector& u, double* dropped = nullptr) const;
  Collection apply(const Collection& c, double* dropped = nullptr) const;

  /// Throws AdmissibilityError when z lies in a disk |z - a| <= c2 lambda a.
  void check_admissible(Complex z) const;
  /// Throws AdmissibilityError when the circle meets a forbidden disk.
  void check_contour(const Contour& contour) const;

  ResolventResult resolvent(const Collection& c, Complex z, const ResolventOptions& opt = {}) const;

  /// -(2 pi i)^{-1} contour integral of the resolvent, trapezoidal nodes.
  Collection project(const Collection& c, const Contour& contour,
                     const ResolventOptions& opt = {}, int threads = 1) const;

  /// Full vector sum_I u_I-hat Omega-tilde.
  CVector realize(const Collection& c) const;
  /// <realize(a), realize(b)> / ||Omega-tilde||^2 (linear in b, antilinear in a).
  Complex inner(const Collection& a, const Collection& b) const;

  /// Free levels of H_{Lambda,0} up to `cutoff`.
  std::vector<double> free_levels_upto(double cutoff) const;

 private:
  GroundFrame frame_;
  SparseMatrix phi_;
  double lambda_;
  double c2_;
  CVector omega_;
  CVector phi_omega_;
  double omega_norm2_;
};

/// Default contour around mu: radius 0.4 times the distance to the nearest other free level.
Contour default_contour(const Model& model);

struct LocalizationReport {
  double c2 = 0.0;           // smallest c2 placing every eigenvalue in some disk
  double gap = 0.0;          // lowest nonzero eigenvalue of H - E
  std::vector<double> distance;  // per eigenvalue: min_a |e - a| / (lambda a)
  std::vector<double> nearest;   // per eigenvalue: the free level attaining it
};

/// Fits c2 from eigenvalues of H - E (ascending) against free levels.
LocalizationReport localization_fit(const std::vector<double>& shifted_eigs,
                                    const RVector& local_energies, int nsites, double lambda);

}  // namespace qpert
