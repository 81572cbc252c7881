#pragma once

#include <array>
#include <memory>
#include <vector>

#include "qpert/cluster.hpp"

namespace qpert {

/// Ground-state collection together with the data needed to use it as a frame.
struct GroundFrame {
  std::shared_ptr<const ClusterSpace> space;
  Collection gs;
  double energy = 0.0;
  double epsilon = 1.0;  // smallest eps with weighted_norm(gs, eps, h0) <= 1
};

struct GroundStateOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double damping = 1.0;
};

struct FixedPointStep {
  Collection next;
  Collection update;  // next - input
  double energy = 0.0;
  double dropped = 0.0;  // residual weight outside the truncation
};

/// One residual-correction step: r = exp(-V)(H - E) exp(V) Omega_0 read off
/// component-wise, E its scalar part, v'_K = v_K - damping H_{K,0}^{-1} r_K.
FixedPointStep fixed_point_map(const Collection& c, const ClusterSpace& space,
                               const SparseMatrix& h, double damping = 1.0);

struct GroundStateDiagnostics {
  int iterations = 0;
  std::vector<double> update_norms;  // undamped correction norm per iteration
  std::vector<double> contraction_ratios;
  std::vector<double> energies;
  double final_damping = 1.0;
  double epsilon = 1.0;
  double weighted_bound = 0.0;  // weighted_norm(gs, epsilon, h0) at the fitted eps
};

struct GroundStateResult {
  GroundFrame frame;
  GroundStateDiagnostics diag;
};

/// Iterates fixed_point_map from the empty collection.  Throws
/// ConvergenceError on two consecutive growing updates or after max_iter.
GroundStateResult solve_ground_state(std::shared_ptr<const ClusterSpace> space,
                                     const SparseMatrix& h, const GroundStateOptions& opt = {});

/// Normalized exp_apply(frame.gs).
CVector ground_vector(const GroundFrame& frame);

/// Operator on a list of sites in the product eigenbasis (first site least significant).
struct LocalOperator {
  std::vector<int> sites;
  CMatrix op;
};

/// omega(A1 A2) - omega(A1) omega(A2) in the normalized vector `psi`.
Complex connected_correlation(const ProductSpace& ps, const CVector& psi, const LocalOperator& a1,
                              const LocalOperator& a2);

struct DecayScan {
  std::vector<int> separations;
  std::vector<double> magnitudes;
  double slope = 0.0;  // least-squares slope of log|C(r)| against r
};

/// Connected correlations of `op` at `origin` and `origin + r` along axis 0.
DecayScan decay_scan(const GroundFrame& frame, const CMatrix& op, int origin,
                     const std::vector<int>& separations);

/// Least-squares line through (x, y): returns {slope, intercept, r2}.
std::array<double, 3> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qpert
