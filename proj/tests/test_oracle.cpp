#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "qpert/oracle.hpp"

using namespace qpert;
using namespace qpert::testing;

namespace {

Hamiltonian tfi_chain(double lam, int n, Boundary b = Boundary::open) {
  return assemble_hamiltonian(Volume::chain(n, b), tfi(lam));
}

double closed_form(double lam, double p) {
  return std::sqrt(1 + 4 * lam * lam - 4 * lam * std::cos(2 * std::numbers::pi * p));
}

}  // namespace

TEST_CASE("free spectrum counts excitations") {
  const auto ed = dense_spectrum(tfi_chain(0.0, 3).full);
  const std::vector<double> expect{0, 1, 1, 1, 2, 2, 2, 3};
  for (int i = 0; i < 8; ++i) CHECK(ed.values(i) == doctest::Approx(expect[i]).epsilon(1e-14));
  CHECK(ed.vectors.cols() == 8);
  CHECK(dense_spectrum(tfi_chain(0.0, 3).full, false).vectors.size() == 0);
}

TEST_CASE("weak perturbation lowers the ground energy at second order") {
  const double e0 = dense_spectrum(tfi_chain(0.05, 8).full, false).values(0);
  CHECK(e0 < 0.0);
  CHECK(e0 > -0.01);
}

TEST_CASE("Lanczos agrees with dense diagonalization") {
  const auto h = tfi_chain(0.1, 10).full;
  const auto dense = dense_spectrum(h, false);
  const auto lz = extremal_eigs(h, 4);
  REQUIRE(lz.values.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(lz.values(i) - dense.values(i)) <= 1e-9);
    const CVector v = lz.vectors.col(i);
    CHECK((h * v - lz.values(i) * v).norm() <= 1e-9);
  }
  const auto [lo, hi] = spectral_bounds(h);
  CHECK(lo <= dense.values(0));
  CHECK(hi >= dense.values(dense.values.size() - 1));
}

TEST_CASE("gap of a fourteen-site ring") {
  const double lam = 0.1;
  const auto lz = extremal_eigs(tfi_chain(lam, 14, Boundary::periodic).full, 2);
  const double gap = lz.values(1) - lz.values(0);
  CHECK(gap >= 0.7);
  CHECK(gap <= 1.0);
  CHECK(gap == doctest::Approx(closed_form(lam, 0.0)).epsilon(1e-3));
}

TEST_CASE("momentum sectors of the Ising ring") {
  const double lam = 0.1;
  const int n = 8;
  const Volume ring = Volume::chain(n, Boundary::periodic);

  SUBCASE("one level per sector on the closed-form band") {
    const auto band = momentum_band(ring, tfi(lam), 0.5, 1.5);
    CHECK(band.count() == static_cast<std::size_t>(n));
    const auto low = band.lowest();
    for (int j = 0; j < n; ++j) CHECK(std::abs(low[j] - closed_form(lam, double(j) / n)) <= 1e-6);

    // every sector level is an eigenvalue of the full Hamiltonian
    const auto ed = dense_spectrum(assemble_hamiltonian(ring, tfi(lam)).full, false);
    CHECK(std::abs(band.ground - ed.values(0)) <= 1e-10);
    for (const auto& s : band.sectors)
      for (double e : s.energies) {
        double best = INFINITY;
        for (Eigen::Index i = 0; i < ed.values.size(); ++i)
          best = std::min(best, std::abs(ed.values(i) - ed.values(0) - e));
        CHECK(best <= 1e-8);
      }
  }
  SUBCASE("flat band without perturbation") {
    const auto band = momentum_band(ring, tfi(0.0), 0.5, 1.5);
    CHECK(band.count() == static_cast<std::size_t>(n));
    for (double e : band.lowest()) CHECK(e == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("open chains are rejected") {
    CHECK_THROWS_AS(momentum_band(Volume::chain(n, Boundary::open), tfi(lam), 0.5, 1.5), ModelError);
  }
}

TEST_CASE("translations of basis states") {
  CHECK(translate_state(0b0001, 2, 4) == 0b0010);
  CHECK(translate_state(0b1000, 2, 4) == 0b0001);
  // base 3, three sites: digits (2, 0, 1) -> (1, 2, 0)
  CHECK(translate_state(2 + 0 * 3 + 1 * 9, 3, 3) == 1 + 2 * 3 + 0 * 9);
  std::size_t s = 0b0110;
  for (int k = 0; k < 4; ++k) s = translate_state(s, 2, 4);
  CHECK(s == 0b0110);
}

TEST_CASE("Chebyshev evolution matches the dense exponential") {
  const auto h = tfi_chain(0.1, 8).full;
  const auto ed = dense_spectrum(h);
  std::mt19937_64 rng(7);
  CVector v = random_vector(rng, h.rows());
  v.normalize();

  CHECK((evolve_reference(h, v, 0.0) - v).norm() <= 1e-14);
  for (double t : {0.3, 2.0, 11.0}) {
    const CVector phases = (ed.values.cast<Complex>() * Complex(0.0, -t)).array().exp();
    const CVector exact = ed.vectors * phases.cwiseProduct(ed.vectors.adjoint() * v);
    const CVector got = evolve_reference(h, v, t);
    CHECK((got - exact).norm() <= 1e-8);
    CHECK(std::abs(got.norm() - 1.0) <= 1e-10);
  }
  const CVector g = ed.vectors.col(0);
  const CVector gt = evolve_reference(h, g, 5.0);
  CHECK((gt - std::polar(1.0, -5.0 * ed.values(0)) * g).norm() <= 1e-10);
}
