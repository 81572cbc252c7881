#include "qpert/hamiltonian.hpp"

#include <cmath>
#include <set>

namespace qpert {

ProductSpace::ProductSpace(int local_dim, int nsites) : d_(local_dim), n_(nsites) {
  if (d_ < 2) throw ModelError("local dimension must be >= 2");
  if (n_ < 1 || n_ > kMaxSites) throw ModelError("site count out of range");
  const double log_dim = n_ * std::log2(static_cast<double>(d_));
  if (log_dim > 40) throw CapacityError("product space dimension overflows");
  stride_.resize(n_ + 1);
  stride_[0] = 1;
  for (int k = 0; k < n_; ++k) stride_[k + 1] = stride_[k] * static_cast<std::size_t>(d_);
  dim_ = stride_[n_];
}

SiteMask ProductSpace::excited(std::size_t state) const {
  if (d_ == 2) return static_cast<SiteMask>(state);
  SiteMask m = 0;
  for (int k = 0; k < n_ && state; ++k) {
    if (state % d_) m |= SiteMask{1} << k;
    state /= d_;
  }
  return m;
}

std::size_t ProductSpace::clear(std::size_t state, SiteMask mask) const {
  if (d_ == 2) return state & ~static_cast<std::size_t>(mask);
  while (mask) {
    const int k = lowest_site(mask);
    mask &= mask - 1;
    state -= digit(state, k) * stride_[k];
  }
  return state;
}

std::size_t ProductSpace::keep(std::size_t state, SiteMask mask) const {
  if (d_ == 2) return state & static_cast<std::size_t>(mask);
  std::size_t out = 0;
  while (mask) {
    const int k = lowest_site(mask);
    mask &= mask - 1;
    out += digit(state, k) * stride_[k];
  }
  return out;
}

std::vector<std::size_t> ProductSpace::excited_offsets(SiteMask mask) const {
  std::vector<int> sites;
  for (SiteMask m = mask; m; m &= m - 1) sites.push_back(lowest_site(m));
  std::size_t count = 1;
  for (std::size_t i = 0; i < sites.size(); ++i) count *= static_cast<std::size_t>(d_ - 1);
  std::vector<std::size_t> out(count);
  for (std::size_t a = 0; a < count; ++a) {
    std::size_t rem = a, off = 0;
    for (int k : sites) {
      off += (rem % (d_ - 1) + 1) * stride_[k];
      rem /= (d_ - 1);
    }
    out[a] = off;
  }
  return out;
}

std::size_t ProductSpace::amplitude_index(std::size_t state, SiteMask mask) const {
  if (d_ == 2) return 0;
  std::size_t idx = 0, mul = 1;
  for (SiteMask m = mask; m; m &= m - 1) {
    const int k = lowest_site(m);
    idx += (digit(state, k) - 1) * mul;
    mul *= static_cast<std::size_t>(d_ - 1);
  }
  return idx;
}

std::vector<std::vector<int>> perturbation_supports(const Volume& volume, const Model& model) {
  std::vector<std::vector<int>> out;
  const auto& offsets = model.pert().offsets;
  for (int x = 0; x < volume.size(); ++x) {
    std::vector<int> sites;
    std::set<int> uniq;
    bool inside = true;
    for (const auto& off : offsets) {
      auto s = volume.shifted(x, off);
      if (!s) {
        inside = false;
        break;
      }
      sites.push_back(*s);
      uniq.insert(*s);
    }
    if (!inside) continue;
    if (uniq.size() != sites.size())
      throw ModelError("periodic extent smaller than the perturbation range");
    out.push_back(std::move(sites));
  }
  return out;
}

Hamiltonian assemble_hamiltonian(const Volume& volume, const Model& model) {
  const int d = model.dim();
  const double log_dim = volume.size() * std::log2(static_cast<double>(d));
  if (log_dim > 40) throw CapacityError("assemble_hamiltonian: dimension overflows");
  ProductSpace space(d, volume.size());
  require_capacity(space.dim(), "assemble_hamiltonian");

  const RVector& e = model.energies();
  RVector diag(space.dim());
  for (std::size_t s = 0; s < space.dim(); ++s) {
    double acc = 0.0;
    for (int k = 0; k < space.sites(); ++k) acc += e(space.digit(s, k));
    diag(static_cast<Eigen::Index>(s)) = acc;
  }

  const CMatrix& phi = model.phi_eigen();
  const auto supports = perturbation_supports(volume, model);
  // nonzero pattern of the local term, column-wise
  std::vector<std::vector<std::pair<int, Complex>>> cols(phi.cols());
  for (Eigen::Index j = 0; j < phi.cols(); ++j)
    for (Eigen::Index i = 0; i < phi.rows(); ++i)
      if (std::abs(phi(i, j)) > 1e-15) cols[j].emplace_back(static_cast<int>(i), phi(i, j));

  std::vector<Eigen::Triplet<Complex>> trip;
  for (const auto& sites : supports) {
    const int m = static_cast<int>(sites.size());
    std::vector<std::size_t> local_stride(m);
    for (int j = 0; j < m; ++j) local_stride[j] = space.stride(sites[j]);
    for (std::size_t s = 0; s < space.dim(); ++s) {
      int l = 0, mul = 1;
      std::size_t base = s;
      for (int j = 0; j < m; ++j) {
        const int dg = space.digit(s, sites[j]);
        l += dg * mul;
        mul *= d;
        base -= dg * local_stride[j];
      }
      for (const auto& [lp, val] : cols[l]) {
        std::size_t t = base;
        int rem = lp;
        for (int j = 0; j < m; ++j) {
          t += (rem % d) * local_stride[j];
          rem /= d;
        }
        trip.emplace_back(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s), val);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(space.dim());
  SparseMatrix pert(n, n);
  pert.setFromTriplets(trip.begin(), trip.end());
  pert.makeCompressed();

  for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, diag(i));
  SparseMatrix full(n, n);
  full.setFromTriplets(trip.begin(), trip.end());
  full.makeCompressed();
  return Hamiltonian{space, std::move(diag), std::move(pert), std::move(full)};
}

CVector apply_local(const ProductSpace& space, const CVector& v, const std::vector<int>& sites,
                    const CMatrix& op) {
  const int d = space.local_dim();
  const int m = static_cast<int>(sites.size());
  CVector out = CVector::Zero(v.size());
  SiteMask mask = 0;
  for (int s : sites) mask |= SiteMask{1} << s;
  const auto ld = op.rows();
  std::vector<std::size_t> loc(ld);
  for (Eigen::Index l = 0; l < ld; ++l) {
    std::size_t off = 0;
    Eigen::Index rem = l;
    for (int j = 0; j < m; ++j) {
      off += (rem % d) * space.stride(sites[j]);
      rem /= d;
    }
    loc[l] = off;
  }
  CVector buf(ld);
  space.for_each_base(mask, [&](std::size_t base) {
    for (Eigen::Index l = 0; l < ld; ++l) buf(l) = v(static_cast<Eigen::Index>(base + loc[l]));
    const CVector r = op * buf;
    for (Eigen::Index l = 0; l < ld; ++l) out(static_cast<Eigen::Index>(base + loc[l])) += r(l);
  });
  return out;
}

}  // namespace qpert
