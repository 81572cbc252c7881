#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpert/types.hpp"

namespace qpert {

inline constexpr int kMaxDim = 3;

using Coord = std::array<int, kMaxDim>;

enum class Boundary { open, periodic };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

/// Finite set of lattice points in Z^nu.  Periodic volumes are full boxes
/// with per-axis wrap lengths; open volumes may be arbitrary point sets.
class Volume {
 public:
  Volume(int nu, std::vector<Coord> sites, Boundary boundary, Coord extent);

  static Volume chain(int n, Boundary boundary);
  static Volume box(const std::vector<int>& extents, Boundary boundary);

  int nu() const { return nu_; }
  int size() const { return static_cast<int>(sites_.size()); }
  Boundary boundary() const { return boundary_; }
  const Coord& extent() const { return extent_; }
  const Coord& site(int k) const { return sites_[k]; }
  const std::vector<Coord>& sites() const { return sites_; }
  SiteMask all_sites() const;

  std::optional<int> index_of(const Coord& c) const;

  /// Site reached from `k` by `offset`, wrapping on periodic axes.
  std::optional<int> shifted(int k, const Coord& offset) const;

  /// Shift every site of `mask`; nullopt when a site leaves an open volume.
  std::optional<SiteMask> shifted_mask(SiteMask mask, const Coord& offset) const;

  /// l1 distance, minimum image on periodic axes.
  int distance(int a, int b) const;

  /// Per-axis displacement b - a, minimum image on periodic axes.
  Coord displacement(int a, int b) const;

 private:
  Coord wrap(Coord c) const;

  int nu_;
  std::vector<Coord> sites_;
  Boundary boundary_;
  Coord extent_;
  std::vector<int> lookup_;  // dense index over the bounding box
  Coord lo_{};
  Coord span_{};
};

/// Single-site data.  The ground vector is the basis vector e_{omega_index}.
struct LocalSite {
  int dim = 2;
  CMatrix h;
  int omega_index = 0;
  double mu = 1.0;
  CVector w;
};

/// Translation-invariant finite-range perturbation phi acting on the sites
/// `offsets` (first offset is the anchor).  Tensor ordering: first offset is
/// the least significant factor.
struct PerturbationTemplate {
  std::vector<Coord> offsets;
  CMatrix phi;
  double strength = 0.0;
};

struct ValidationReport {
  bool hermitian = true;
  double symmetry_defect = 0.0;
  bool ground_ok = true;
  double ground_residual = 0.0;
  double gap = 0.0;
  bool gap_ok = true;
  bool mu_eigen_ok = true;
  bool mu_nondegenerate = true;
  double mu_isolation = 0.0;  // distance of mu from sums of >= 2 nonzero levels
  bool mu_isolated = true;
  bool pert_hermitian = true;
  double pert_defect = 0.0;
  double strength = 0.0;
  std::vector<std::string> failures;

  bool pass() const { return failures.empty(); }
};

/// Checks every LocalSite / PerturbationTemplate invariant.  Sums of nonzero
/// eigenvalues are scanned up to mu + margin.
ValidationReport validate_model(const LocalSite& site,
                                const PerturbationTemplate& pert,
                                double isolation_margin = 2.0);

/// Transverse-field Ising preset: h = diag(0,1), phi = -lambda sx (x) sx on {0, e_1}.
std::pair<LocalSite, PerturbationTemplate> preset_tfi(double lambda, int nu = 1);

/// Validated model with the local eigenbasis precomputed.  Local basis index 0
/// is the ground vector; indices 1..d-1 are the excited eigenvectors ordered
/// by eigenvalue then original index.  All full-space objects built from a
/// Model live in this product eigenbasis.
class Model {
 public:
  Model(LocalSite site, PerturbationTemplate pert, double isolation_margin = 2.0);

  int dim() const { return site_.dim; }
  const LocalSite& site() const { return site_; }
  const PerturbationTemplate& pert() const { return pert_; }
  double lambda() const { return pert_.strength; }
  double mu() const { return site_.mu; }

  /// Columns: eigenbasis vectors in the original local basis.
  const CMatrix& basis() const { return basis_; }
  /// Local energies in the eigenbasis (energies()[0] == 0).
  const RVector& energies() const { return energies_; }
  /// Eigenbasis index of w.
  int w_index() const { return w_index_; }
  /// phi expressed in the product eigenbasis.
  const CMatrix& phi_eigen() const { return phi_eigen_; }
  /// Transforms an operator on `nsites` sites into the product eigenbasis.
  CMatrix to_eigenbasis(const CMatrix& op, int nsites) const;
  /// Gap to the nearest other level of H_{Lambda,0} as seen from mu.
  double mu_gap() const;

 private:
  LocalSite site_;
  PerturbationTemplate pert_;
  CMatrix basis_;
  RVector energies_;
  int w_index_ = 1;
  CMatrix phi_eigen_;
};

/// Kronecker power U (x) ... (x) U with `n` factors, first factor least significant.
CMatrix kron_power(const CMatrix& u, int n);

/// Free levels: all sums of local energies over at most `max_sites` excited
/// sites that do not exceed `cutoff`, sorted and deduplicated.
std::vector<double> free_levels(const RVector& local_energies, int max_sites, double cutoff);

}  // namespace qpert
