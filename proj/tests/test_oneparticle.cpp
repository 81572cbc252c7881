#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "qpert/groundstate.hpp"
#include "qpert/oneparticle.hpp"
#include "qpert/oracle.hpp"

using namespace qpert;
using namespace qpert::testing;

namespace {

struct Ring {
  Model model;
  Volume vol;
  Hamiltonian ham;
  std::shared_ptr<const ClusterSpace> space;
  GroundFrame frame;
  std::unique_ptr<RenormOperator> op;
  ProjectionOptions po;

  Ring(Model m, int n, Boundary b = Boundary::periodic, Truncation t = {4, 6})
      : model(std::move(m)),
        vol(Volume::chain(n, b)),
        ham(assemble_hamiltonian(vol, model)),
        space(ClusterSpace::create(vol, model, t)) {
    frame = solve_ground_state(space, ham.full).frame;
    op = std::make_unique<RenormOperator>(frame, ham, model.lambda(), 2.5);
    po.contour = default_contour(model);
  }
};

double closed_form(double lam, double p) {
  return std::sqrt(1 + 4 * lam * lam - 4 * lam * std::cos(2 * std::numbers::pi * p));
}

// Gram matrix of P w_x Omega from exact eigenvectors: P projects onto the
// levels of H - E within `radius` of mu, Omega is the exact ground vector.
CMatrix gram_from_ed(const Hamiltonian& ham, int n, double radius) {
  const auto ed = dense_spectrum(ham.full);
  const auto dim = ed.vectors.rows();
  const CVector omega = ed.vectors.col(0);
  CMatrix p = CMatrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < ed.values.size(); ++i)
    if (std::abs(ed.values(i) - ed.values(0) - 1.0) < radius) p += ed.vectors.col(i) * ed.vectors.col(i).adjoint();
  CMatrix seeds(dim, n);
  for (int x = 0; x < n; ++x) {
    CVector v = CVector::Zero(dim);  // w-hat at x: move the weight of bit-x-clear states to bit x set
    for (Eigen::Index s = 0; s < dim; ++s)
      if (!(s >> x & 1)) v(s | (Eigen::Index{1} << x)) = omega(s);
    seeds.col(x) = p * v;
  }
  return seeds.adjoint() * seeds;
}

}  // namespace

TEST_CASE("free case: projection, Gram, basis and hoppings are trivial") {
  Ring r(tfi(0.0), 6);
  const Collection p = project_w(*r.op, 2, r.po);
  Collection w;
  w.add(r.space->w_at(2));
  CHECK(distance(p, w) < 1e-13);
  const auto b = build_basis(*r.op, default_window(r.vol, 0), r.po);
  CHECK((b.gram - CMatrix::Identity(6, 6)).norm() < 1e-12);
  CHECK(distance(b.xi[3], b.projected[3]) < 1e-12);
  const auto h = hopping_amplitudes(*r.op, b, 0);
  for (std::size_t i = 0; i < h.y.size(); ++i)
    CHECK(std::abs(h.t[i] - (h.y[i] == 0 ? 1.0 : 0.0)) < 1e-12);
  const Dispersion m(h, 6);
  for (const auto& s : sample_dispersion(m, 16, 1e-12)) CHECK(s.m == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("projection commutes with lattice shifts on a ring") {
  Ring r(tfi(0.1), 8);
  const Collection p2 = project_w(*r.op, 2, r.po);
  const Collection p3 = project_w(*r.op, 3, r.po);
  CHECK(distance(shift_collection(p2, *r.space, Coord{1, 0, 0}), p3) <= 1e-10);
}

TEST_CASE("Gram matrix agrees with the exact spectral projector") {
  Ring r(tfi(0.1), 8, Boundary::periodic, {4, 8});
  const auto b = build_basis(*r.op, default_window(r.vol, 0), r.po);
  const CMatrix ref = gram_from_ed(r.ham, 8, 0.4);
  CHECK((b.gram - b.gram.adjoint()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(b.gram);
  CHECK(es.eigenvalues().minCoeff() > 0.5);
  for (int y = 0; y < 8; ++y) CHECK(std::abs(b.gram(0, y) - ref(0, y)) <= 1e-5);
  // the distance-two entry exceeds the distance-one entry in the exact projector too
  CHECK(std::abs(ref(0, 2)) > std::abs(ref(0, 1)));
}

TEST_CASE("orthonormal basis on a ring") {
  Ring r(tfi(0.1), 8);
  const auto b = build_basis(*r.op, default_window(r.vol, 0), r.po);
  const CMatrix g = gram_matrix(*r.op, b.xi);
  CHECK((g - CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(b.xi_remainder_epsilon < 1.0);
  CHECK(anchored_weighted_norm(b.xi[0] - [&] {
          Collection w;
          w.add(r.space->w_at(0));
          return w;
        }(), *r.space, 0, b.xi_remainder_epsilon, true) <= 1.0 + 1e-9);
  CHECK_THROWS_AS(inverse_sqrt(CMatrix::Zero(2, 2)), Error);
}

TEST_CASE("hopping amplitudes of the Ising ring") {
  const double lam = 0.1;
  Ring r(tfi(lam), 12);
  const auto b = build_basis(*r.op, default_window(r.vol, 0), r.po);
  const auto h = hopping_amplitudes(*r.op, b, 0);
  CHECK(h.hermitian_defect <= 1e-10);
  for (std::size_t i = 0; i < h.y.size(); ++i) {
    if (h.y[i] == 0) CHECK(std::abs(h.t[i] - 1.0) <= 2 * lam * lam);
    if (std::abs(h.y[i]) == 1) CHECK(std::abs(h.t[i] + lam) <= 2 * lam * lam);
    if (h.y[i] != 0) CHECK(std::abs(h.t[i]) <= std::pow(2 * lam, std::abs(h.y[i])));
  }
  CHECK(h.slope < 0);
  CHECK(h.r2 >= 0.95);

  const Dispersion m(h, 12);
  CHECK(m(0.0) == doctest::Approx(1 - 2 * lam).epsilon(1e-2));
  CHECK(m(0.5) == doctest::Approx(1 + 2 * lam).epsilon(1e-2));
  for (int j = 0; j <= 200; ++j) {
    const double p = j / 200.0;
    CHECK(std::abs(m(p) - closed_form(lam, p)) <= 1e-2);
    CHECK(m(p) == doctest::Approx(m(p + 1.0)).epsilon(1e-12));
    CHECK(std::abs(m.value(p).imag()) <= 1e-12);
  }
  // finite differences of m against the analytic derivative
  for (double p : {0.1, 0.25, 0.4}) {
    const double fd = (m(p + 1e-6) - m(p - 1e-6)) / 2e-6;
    CHECK(m.derivative(p) == doctest::Approx(fd).epsilon(1e-6));
    CHECK(m.velocity(p) == doctest::Approx(-fd / (2 * std::numbers::pi)).epsilon(1e-6));
  }
}

TEST_CASE("antipodal hopping is split on even rings") {
  Hoppings h;
  h.y = {-1, 0, 1, 2};
  h.t = {Complex(0.3), Complex(1.0), Complex(0.3), Complex(0.2)};
  const Dispersion m(h, 4);
  // the y = 2 term contributes 0.2 cos(4 pi p), real on every p
  CHECK(std::abs(m.value(0.1).imag()) < 1e-15);
  CHECK(m(0.25) == doctest::Approx(1.0 + 0.6 * std::cos(std::numbers::pi / 2) + 0.2 * std::cos(std::numbers::pi)));
  Hoppings bad = h;
  bad.t[0] = Complex(0.0, 0.3);
  CHECK_THROWS_AS(sample_dispersion(Dispersion(bad, 0), 8, 1e-10), Error);
}

TEST_CASE("expansion in the one-particle basis") {
  SUBCASE("the seed itself gives the square-root Gram row") {
    Ring r(tfi(0.1), 8);
    const auto b = build_basis(*r.op, default_window(r.vol, 0), r.po);
    const auto e = expand_one_particle(*r.op, b, r.space->w_at(0), r.po);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(b.gram);
    const CMatrix sq = es.operatorSqrt();
    for (int y = 0; y < 8; ++y) CHECK(std::abs(e.coefficients(y) - sq(0, y)) <= 1e-10);
    CHECK(e.residual <= 1e-10);
  }
  SUBCASE("a higher level is projected away without perturbation") {
    Ring r(qutrit(0.0), 5);
    const auto b = build_basis(*r.op, default_window(r.vol, 0), r.po);
    const ClusterVector u{SiteMask{1} << 2, CVector::Unit(2, 1)};  // energy 1.5 level
    const auto e = expand_one_particle(*r.op, b, u, r.po);
    CHECK(e.l1 <= 1e-12);
  }
  SUBCASE("a bond pair is parity-even and has no one-particle part") {
    Ring r(tfi(0.1), 8);
    const auto b = build_basis(*r.op, default_window(r.vol, 0), r.po);
    const auto e = expand_one_particle(*r.op, b, ClusterVector{0b11, CVector::Ones(1)}, r.po);
    CHECK(e.l1 <= 1e-14);
  }
  SUBCASE("without parity a bond pair has a small one-particle part") {
    const double lam = 0.04;  // the 1.5 level limits the contour radius to 0.2
    Ring r(qutrit(lam), 8);
    const auto b = build_basis(*r.op, default_window(r.vol, 0), r.po);
    const CVector amp = CVector::Unit(4, 0);  // both sites on the mu level
    const auto e = expand_one_particle(*r.op, b, ClusterVector{0b11, amp}, r.po);
    CHECK(e.l1 > 1e-4);
    CHECK(e.l1 <= 5 * lam);
    CHECK(e.residual <= 1e-6);
  }
}

TEST_CASE("open windows keep away from the edges") {
  const Volume v = Volume::chain(10, Boundary::open);
  const auto w = default_window(v, 2);
  CHECK(w.front() == 2);
  CHECK(w.back() == 7);
  CHECK_THROWS_AS(default_window(v, 5), ModelError);
}
