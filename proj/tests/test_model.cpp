#include <doctest.h>

#include <cmath>
#include <random>

#include "qpert/hamiltonian.hpp"
#include "qpert/metric.hpp"
#include "qpert/oracle.hpp"

using namespace qpert;

namespace {

CMatrix sigma_x() {
  CMatrix s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

// Smallest connected vertex set of the open grid box containing every terminal,
// found by enumerating all cell subsets; edges of a tree on k cells = k - 1.
int steiner_by_enumeration(const std::vector<std::pair<int, int>>& pts, int wx, int wy) {
  const int cells = wx * wy;
  unsigned need = 0;
  for (auto [x, y] : pts) need |= 1u << (x + wx * y);
  int best = 1 << 30;
  for (unsigned s = 0; s < (1u << cells); ++s) {
    if ((s & need) != need) continue;
    const int k = __builtin_popcount(s);
    if (k - 1 >= best) continue;
    unsigned seen = 1u << __builtin_ctz(s), frontier = seen;
    while (frontier) {
      unsigned next = 0;
      for (int c = 0; c < cells; ++c) {
        if (!(frontier >> c & 1)) continue;
        const int x = c % wx, y = c / wx;
        if (x > 0) next |= 1u << (c - 1);
        if (x + 1 < wx) next |= 1u << (c + 1);
        if (y > 0) next |= 1u << (c - wx);
        if (y + 1 < wy) next |= 1u << (c + wx);
      }
      next &= s & ~seen;
      seen |= next;
      frontier = next;
    }
    if (seen == s) best = k - 1;
  }
  return best;
}

SiteMask mask_of(const Volume& v, const std::vector<Coord>& pts) {
  SiteMask m = 0;
  for (const auto& p : pts) m |= SiteMask{1} << *v.index_of(p);
  return m;
}

}  // namespace

TEST_CASE("validation of the Ising site passes with unit gap") {
  const auto [site, pert] = preset_tfi(0.1);
  const auto r = validate_model(site, pert);
  CHECK(r.pass());
  CHECK(r.gap == doctest::Approx(1.0));
  CHECK(r.strength == doctest::Approx(0.1));
}

TEST_CASE("validation rejects a small gap and a non-isolated mu") {
  auto [site, pert] = preset_tfi(0.1);
  site.h(1, 1) = 0.5;
  site.mu = 0.5;
  auto r = validate_model(site, pert);
  CHECK_FALSE(r.pass());
  CHECK(std::find(r.failures.begin(), r.failures.end(), "gap < 1") != r.failures.end());

  LocalSite s3;
  s3.dim = 3;
  s3.h = CMatrix::Zero(3, 3);
  s3.h(1, 1) = 1.0;
  s3.h(2, 2) = 2.0;
  s3.mu = 2.0;
  s3.w = CVector::Unit(3, 2);
  PerturbationTemplate p3;
  p3.offsets = {Coord{0, 0, 0}};
  p3.phi = CMatrix::Zero(3, 3);
  r = validate_model(s3, p3);
  CHECK_FALSE(r.pass());
  CHECK(std::find(r.failures.begin(), r.failures.end(), "mu equals sum of nonzero eigenvalues") !=
        r.failures.end());
}

TEST_CASE("preset strength is the largest singular value") {
  CHECK(preset_tfi(0.0).second.strength == 0.0);
  CHECK(preset_tfi(0.0).second.phi.norm() == 0.0);
  const auto p = preset_tfi(0.1).second;
  const CMatrix ref = 0.1 * kron_power(sigma_x(), 2);
  const double sv = Eigen::JacobiSVD<CMatrix>(ref).singularValues()(0);
  CHECK(p.strength == doctest::Approx(sv).epsilon(1e-14));
}

TEST_CASE("two-site Hamiltonian matches hand-built tensor arithmetic") {
  const double lam = 0.1;
  const auto [site, pert] = preset_tfi(lam);
  const Model model(site, pert);
  const auto ham = assemble_hamiltonian(Volume::chain(2, Boundary::open), model);
  // state index = bitmask of excited sites; phi = -lam sx (x) sx
  CMatrix ref = CMatrix::Zero(4, 4);
  for (int s = 0; s < 4; ++s) ref(s, s) = __builtin_popcount(static_cast<unsigned>(s));
  ref(0, 3) = ref(3, 0) = ref(1, 2) = ref(2, 1) = -lam;
  CHECK((CMatrix(ham.full) - ref).norm() < 1e-15);
  // |00>,|11> block [[0,-lam],[-lam,2]] gives 1 - sqrt(1 + lam^2)
  const double e0 = dense_spectrum(ham.full, false).values(0);
  CHECK(e0 == doctest::Approx(1.0 - std::sqrt(1.0 + lam * lam)).epsilon(1e-13));
  CHECK(std::abs(e0 + lam * lam / 2) <= lam * lam * lam * lam);
}

TEST_CASE("free chain is diagonal with the excitation count") {
  const auto [site, pert] = preset_tfi(0.0);
  const auto ham = assemble_hamiltonian(Volume::chain(3, Boundary::open), Model(site, pert));
  const CMatrix h(ham.full);
  for (int s = 0; s < 8; ++s) CHECK(h(s, s).real() == __builtin_popcount(static_cast<unsigned>(s)));
  CHECK((h - CMatrix(h.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("eight-site ground energy follows second order") {
  const double lam = 0.1;
  const auto [site, pert] = preset_tfi(lam);
  const auto ham = assemble_hamiltonian(Volume::chain(8, Boundary::open), Model(site, pert));
  const double e0 = dense_spectrum(ham.full, false).values(0);
  CHECK(std::abs(e0 - (-(8 - 1) * lam * lam / 2)) <= 0.1 * (8 - 1) * lam * lam / 2);
}

TEST_CASE("periodic Hamiltonian commutes with translation") {
  const auto [site, pert] = preset_tfi(0.2);
  const int n = 6;
  const auto ham = assemble_hamiltonian(Volume::chain(n, Boundary::periodic), Model(site, pert));
  const CMatrix h(ham.full);
  CMatrix t = CMatrix::Zero(64, 64);
  for (std::size_t s = 0; s < 64; ++s) t(static_cast<Eigen::Index>(translate_state(s, 2, n)), s) = 1.0;
  CHECK((t * h - h * t).norm() < 1e-14);
}

TEST_CASE("apply_local agrees with an explicit Kronecker product") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  const ProductSpace ps(2, 4);
  CVector v(16);
  for (auto& x : v) x = Complex(g(rng), g(rng));
  CMatrix op(4, 4);
  for (auto& x : op.reshaped()) x = Complex(g(rng), g(rng));
  // op on sites {1, 2}, site 1 the less significant factor; sites 0 and 3 untouched
  CMatrix full = CMatrix::Zero(16, 16);
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      if (((a >> 0) & 1) != ((b >> 0) & 1) || ((a >> 3) & 1) != ((b >> 3) & 1)) continue;
      full(a, b) = op((a >> 1) & 3, (b >> 1) & 3);
    }
  CHECK((apply_local(ps, v, {1, 2}, op) - full * v).norm() < 1e-13);
}

TEST_CASE("cluster metric on a chain and a square") {
  const Volume chain = Volume::chain(6, Boundary::open);
  const ClusterMetric mc(chain);
  CHECK(mc.connect(SiteMask{1} << 3) == 0);
  CHECK(mc.connect(0b1001) == 3);

  const Volume sq = Volume::box({3, 3}, Boundary::open);
  const ClusterMetric ms(sq);
  const SiteMask tri = mask_of(sq, {{0, 0, 0}, {2, 0, 0}, {0, 2, 0}});
  CHECK(ms.connect(tri) == 4);
  CHECK(steiner_by_enumeration({{0, 0}, {2, 0}, {0, 2}}, 3, 3) == 4);
}

TEST_CASE("cluster metric equals exhaustive Steiner search on a 4x4 box") {
  const Volume sq = Volume::box({4, 4}, Boundary::open);
  const ClusterMetric ms(sq);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> cell(0, 15), count(2, 5);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::pair<int, int>> pts;
    SiteMask m = 0;
    for (int k = count(rng); k > 0; --k) {
      const int c = cell(rng);
      const Coord p{c % 4, c / 4, 0};
      const SiteMask bit = SiteMask{1} << *sq.index_of(p);
      if (m & bit) continue;
      m |= bit;
      pts.push_back({p[0], p[1]});
    }
    CHECK(ms.connect(m) == steiner_by_enumeration(pts, 4, 4));
  }
}

TEST_CASE("cluster metric monotonicity properties") {
  const Volume sq = Volume::box({4, 3}, Boundary::open);
  const ClusterMetric ms(sq);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> site(0, sq.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    SiteMask i = 0, j = 0;
    for (int k = 0; k < 3; ++k) i |= SiteMask{1} << site(rng);
    for (int k = 0; k < 2; ++k) j |= SiteMask{1} << site(rng);
    const SiteMask x = SiteMask{1} << site(rng);
    CHECK(ms.connect(i) <= ms.connect(i | x));
    if ((j & i) == 0) CHECK(ms.connect_to(j, i) <= ms.connect(j | i));
  }
}

TEST_CASE("periodic volumes use minimum-image displacements") {
  const Volume ring = Volume::chain(6, Boundary::periodic);
  CHECK(ring.distance(0, 5) == 1);
  CHECK(ring.displacement(0, 5)[0] == -1);
  CHECK(*ring.shifted(5, Coord{1, 0, 0}) == 0);
  const Volume open = Volume::chain(6, Boundary::open);
  CHECK_FALSE(open.shifted(5, Coord{1, 0, 0}).has_value());
}
