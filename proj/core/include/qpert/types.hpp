#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qpert {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;

/// Bitmask over the sites of a volume; bit k set <=> site k belongs to the set.
using SiteMask = std::uint64_t;

inline constexpr int kMaxSites = 64;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid local Hamiltonian, perturbation or volume.
struct ModelError : Error {
  using Error::Error;
};

/// Requested object would exceed the configured memory ceiling.
struct CapacityError : Error {
  using Error::Error;
};

/// Iterative procedure failed to converge or diverged.
struct ConvergenceError : Error {
  using Error::Error;
};

/// Complex argument lies inside a forbidden spectral disk.
struct AdmissibilityError : Error {
  using Error::Error;
};

/// Maximum full-space dimension, overridable through QPERT_MAX_DIM.
std::size_t max_full_dimension();

/// Throws CapacityError when `dim` exceeds max_full_dimension().
void require_capacity(std::size_t dim, const std::string& what);

inline int popcount(SiteMask m) { return __builtin_popcountll(m); }
inline int lowest_site(SiteMask m) { return __builtin_ctzll(m); }

}  // namespace qpert
