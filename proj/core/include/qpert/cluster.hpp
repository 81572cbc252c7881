#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>

#include "qpert/hamiltonian.hpp"
#include "qpert/metric.hpp"

namespace qpert {

/// Collections keep clusters with |I| <= k_max and d_I <= d_max.
struct Truncation {
  int k_max = 4;
  int d_max = 6;
};

inline constexpr double kPruneThreshold = 1e-14;

/// Element u_I of H'_I: amplitudes over the excited multi-indices of the
/// sites in `support` (lowest site least significant, local excited index
/// e in 1..d-1 stored as e-1).
struct ClusterVector {
  SiteMask support = 0;
  CVector amplitudes;
};

/// Sparse assignment I -> u_I plus the scalar (I = empty) coordinate.
struct Collection {
  Complex scalar{0.0, 0.0};
  std::map<SiteMask, CVector> entries;

  bool empty() const { return entries.empty() && scalar == Complex{}; }
  std::size_t size() const { return entries.size(); }

  /// Accumulates `amps` into the entry for `mask` (or the scalar when mask == 0).
  void add(SiteMask mask, const CVector& amps);
  void add(const ClusterVector& u) { add(u.support, u.amplitudes); }

  Collection& operator+=(const Collection& o);
  Collection& operator-=(const Collection& o);
  Collection& operator*=(Complex a);
};

Collection operator+(Collection a, const Collection& b);
Collection operator-(Collection a, const Collection& b);
Collection operator*(Complex a, Collection c);

/// Volume + local structure + truncation shared by the collection algebra.
/// Non-copyable: hold it through std::shared_ptr.
class ClusterSpace {
 public:
  ClusterSpace(Volume volume, const Model& model, Truncation trunc);
  ClusterSpace(const ClusterSpace&) = delete;
  ClusterSpace& operator=(const ClusterSpace&) = delete;

  static std::shared_ptr<const ClusterSpace> create(Volume volume, const Model& model,
                                                    Truncation trunc = {});

  const Volume& volume() const { return volume_; }
  const ClusterMetric& metric() const { return metric_; }
  const Truncation& truncation() const { return trunc_; }
  int local_dim() const { return d_; }
  const RVector& local_energies() const { return energies_; }
  int w_index() const { return w_index_; }

  /// Full product space; throws CapacityError above the memory ceiling.
  const ProductSpace& full() const;
  bool has_full() const { return full_.has_value() && full_->dim() <= max_full_dimension(); }

  std::size_t amplitude_count(SiteMask mask) const;
  bool admits(SiteMask mask) const;
  /// H_{I,0} eigenvalue of each amplitude of a cluster on `mask`.
  RVector cluster_energies(SiteMask mask) const;

  /// The cluster vector w placed on a single site.
  ClusterVector w_at(int site) const;

 private:
  Volume volume_;
  ClusterMetric metric_;
  Truncation trunc_;
  int d_;
  RVector energies_;
  int w_index_;
  std::optional<ProductSpace> full_;
};

// --- collection-level algebra ------------------------------------------------

/// Drops clusters outside the truncation bounds and prunes near-zero entries.
/// Returns the summed norm of dropped (non-pruned) entries.
double truncate(Collection& c, const ClusterSpace& space);

/// Product rule of creation operators: zero (nullopt) on overlapping
/// supports, else the tensor product re-indexed to sorted site order.
std::optional<ClusterVector> creation_product(const ClusterVector& u, const ClusterVector& v,
                                              int local_dim);

/// Sum over I of ||u_I|| (scalar coordinate included as |u_empty|).
double triple_norm(const Collection& c);

/// max_x sum_{I containing x} ||(H_{I,0}) u_I|| eps^{-(d_I+1)}; H_{I,0} applied when `h0`.
double weighted_norm(const Collection& c, const ClusterSpace& space, double eps, bool h0);

/// sum_I ||(H_{I,0}) u_I|| eps^{-(d_{I u {x}}+1)}, anchored at site x.
double anchored_weighted_norm(const Collection& c, const ClusterSpace& space, int x, double eps,
                              bool h0);

/// Smallest eps in (0,1) with norm_fn(eps) <= 1 (bisection); 1.0 when none.
double fit_epsilon(const std::function<double(double)>& norm_fn);

/// Entry-wise H_{I,0} multiply.
Collection diagonal_apply(const Collection& c, const ClusterSpace& space);

/// Translates every cluster; `site_map` returns the destination site or
/// nullopt (cluster dropped).  Returns the dropped norm via `dropped`.
Collection remap_collection(const Collection& c, const ClusterSpace& dst,
                            const std::function<std::optional<int>(int)>& site_map,
                            double* dropped = nullptr);

/// Lattice shift by `offset` within the same space.
Collection shift_collection(const Collection& c, const ClusterSpace& space, const Coord& offset,
                            double* dropped = nullptr);

// --- full-space realizations -------------------------------------------------

/// Places scalar on Omega_{Lambda,0} and each u_I on H'_I (x) Omega_rest.
CVector to_vector(const Collection& c, const ClusterSpace& space);

/// Reads every component of the orthogonal decomposition; untruncated.
Collection from_vector(const CVector& v, const ClusterSpace& space);

/// u_I-hat applied to v.
CVector creation_apply(const ClusterVector& u, const CVector& v, const ClusterSpace& space);

/// (scalar + sum_I u_I-hat) applied to v.
CVector creation_sum_apply(const Collection& c, const CVector& v, const ClusterSpace& space);

/// In place: v <- exp(sign * sum_I v_I-hat) v = prod_I (1 + sign v_I-hat) v.
void exp_apply_inplace(const Collection& c, CVector& v, const ClusterSpace& space, double sign);

/// exp(sum_I v_I-hat) Omega_{Lambda,0}.
CVector exp_apply(const Collection& c, const ClusterSpace& space);

/// Unique collection with exp_apply(result) = v / <Omega_0, v>, truncated.
Collection truncate_log(const CVector& v, const ClusterSpace& space);

/// Same as truncate_log without dropping clusters outside the bounds.
Collection exact_log(const CVector& v, const ClusterSpace& space);

/// Coordinates of v in the frame sum_I u_I-hat exp(gs) Omega_0, truncated.
Collection frame_components(const CVector& v, const Collection& gs, const ClusterSpace& space);

/// sum_I u_I-hat exp(gs) Omega_0 as a full vector.
CVector reconstruct(const Collection& c, const Collection& gs, const ClusterSpace& space);

// --- text serialization --------------------------------------------------

/// One cluster per line: `(s1,s2,...) : (re,im) (re,im) ...`; the scalar is `()`.
void write_collection(std::ostream& os, const Collection& c);
Collection read_collection(std::istream& is);

}  // namespace qpert
