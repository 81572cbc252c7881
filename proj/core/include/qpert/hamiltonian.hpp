#pragma once

#include <vector>

#include "qpert/model.hpp"

namespace qpert {

/// Tensor-product index arithmetic for d^N dimensional spaces.  Site k is the
/// digit with stride d^k.  Digit 0 is the local ground vector.
class ProductSpace {
 public:
  ProductSpace(int local_dim, int nsites);

  int local_dim() const { return d_; }
  int sites() const { return n_; }
  std::size_t dim() const { return dim_; }
  std::size_t stride(int k) const { return stride_[k]; }

  int digit(std::size_t state, int k) const {
    return static_cast<int>((state / stride_[k]) % static_cast<std::size_t>(d_));
  }
  /// Sites carrying a nonzero digit.
  SiteMask excited(std::size_t state) const;
  /// State with the digits on `mask` set to zero.
  std::size_t clear(std::size_t state, SiteMask mask) const;
  /// State keeping only the digits on `mask`.
  std::size_t keep(std::size_t state, SiteMask mask) const;

  /// Offsets (sum of (e_k+1) d^{site_k}) of every excited configuration of
  /// `mask`, in cluster-amplitude order (lowest site least significant).
  std::vector<std::size_t> excited_offsets(SiteMask mask) const;
  /// Amplitude index of `state` restricted to `mask` (digits must be >= 1).
  std::size_t amplitude_index(std::size_t state, SiteMask mask) const;

  /// Calls fn(base) for every state whose digits on `mask` are zero.
  template <class Fn>
  void for_each_base(SiteMask mask, Fn&& fn) const;

 private:
  int d_;
  int n_;
  std::size_t dim_;
  std::vector<std::size_t> stride_;
};

template <class Fn>
void ProductSpace::for_each_base(SiteMask mask, Fn&& fn) const {
  if (d_ == 2) {
    const std::size_t comp = static_cast<std::size_t>(~mask) & (dim_ - 1);
    std::size_t r = 0;
    do {
      fn(r);
      r = (r - comp) & comp;
    } while (r != 0);
    return;
  }
  std::vector<int> free_sites;
  for (int k = 0; k < n_; ++k)
    if (!(mask >> k & 1)) free_sites.push_back(k);
  std::vector<int> dig(free_sites.size(), 0);
  std::size_t base = 0;
  while (true) {
    fn(base);
    std::size_t i = 0;
    for (; i < free_sites.size(); ++i) {
      const int k = free_sites[i];
      if (++dig[i] < d_) {
        base += stride_[k];
        break;
      }
      base -= stride_[k] * (d_ - 1);
      dig[i] = 0;
    }
    if (i == free_sites.size()) return;
  }
}

/// Finite-volume Hamiltonian in the product eigenbasis of the local
/// Hamiltonian.  `free_diagonal` holds H_{Lambda,0}; `perturbation` holds
/// Phi_Lambda; `full` is their sum.
struct Hamiltonian {
  ProductSpace space;
  RVector free_diagonal;
  SparseMatrix perturbation;
  SparseMatrix full;
};

/// H_Lambda = sum_x h_x + sum_{x : Lambda_0 + x in Lambda} phi_x (open) or
/// with wrapped shifts (periodic).  Throws CapacityError above the ceiling.
Hamiltonian assemble_hamiltonian(const Volume& volume, const Model& model);

/// Sites of the perturbation terms that fit inside the volume; each entry
/// lists the volume sites in offset order.
std::vector<std::vector<int>> perturbation_supports(const Volume& volume, const Model& model);

/// Applies `op` (given in the product eigenbasis, first site least
/// significant) on `sites` of a full-space vector.
CVector apply_local(const ProductSpace& space, const CVector& v, const std::vector<int>& sites,
                    const CMatrix& op);

}  // namespace qpert
