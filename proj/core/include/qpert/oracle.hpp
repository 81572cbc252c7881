#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qpert/hamiltonian.hpp"

namespace qpert {

struct Eigenpairs {
  RVector values;   // ascending
  CMatrix vectors;  // columns; empty when not requested
};

/// Full Hermitian eigendecomposition; dimension <= 2^13.
Eigenpairs dense_spectrum(const SparseMatrix& h, bool with_vectors = true);

struct LanczosOptions {
  int krylov = 120;
  int max_restarts = 200;
  double tol = 1e-9;  // residual ||Hv - Ev|| per pair
  std::uint64_t seed = 0x5eed;
  std::size_t basis_bytes = std::size_t{256} << 20;  // caps the Krylov size on big spaces
};

/// Lowest k eigenpairs by restarted Lanczos with full reorthogonalization and locking.
Eigenpairs extremal_eigs(const SparseMatrix& h, int k, const LanczosOptions& opt = {});

/// Interval containing the spectrum of h (Lanczos extremes widened by residual and margin).
std::pair<double, double> spectral_bounds(const SparseMatrix& h, int steps = 60,
                                          std::uint64_t seed = 0x5eed);

struct SectorLevels {
  int j = 0;                    // momentum k = j / N
  std::vector<double> energies; // eigenvalues of the sector relative to the ground energy, in window
};

struct BandResult {
  double ground = 0.0;
  std::vector<SectorLevels> sectors;  // one per j = 0..N-1
  /// Lowest in-window excitation per sector (NaN when the sector has none).
  std::vector<double> lowest() const;
  std::size_t count() const;
};

/// Translation-sector diagonalization of a periodic chain; energies are
/// reported relative to the overall ground energy when inside [lo, hi].
BandResult momentum_band(const Volume& volume, const Model& model, double lo, double hi);

/// Image of a basis state under the translation site k -> k+1 of a periodic chain.
std::size_t translate_state(std::size_t state, int d, int n);

/// exp(-i t H) v by Chebyshev expansion; `bounds` brackets the spectrum of H.
CVector evolve_reference(const SparseMatrix& h, const CVector& v, double t,
                         std::pair<double, double> bounds, double tol = 1e-14);
CVector evolve_reference(const SparseMatrix& h, const CVector& v, double t);

}  // namespace qpert
