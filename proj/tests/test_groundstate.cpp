#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "qpert/groundstate.hpp"
#include "qpert/oracle.hpp"

using namespace qpert;
using namespace qpert::testing;

namespace {

struct Setup {
  Model model;
  Volume vol;
  Hamiltonian ham;
  std::shared_ptr<const ClusterSpace> space;
  Setup(double lambda, int n, Truncation t = {4, 6})
      : model(tfi(lambda)),
        vol(Volume::chain(n, Boundary::open)),
        ham(assemble_hamiltonian(vol, model)),
        space(ClusterSpace::create(vol, model, t)) {}
};

// <psi| A_i B_j |psi> - <A_i><B_j> with single-site operators built as full matrices
double connected_by_matrices(const CVector& psi, const CMatrix& a, int i, const CMatrix& b, int j, int n) {
  auto site_op = [n](const CMatrix& op, int k) {
    CMatrix full = CMatrix::Identity(1, 1);
    for (int s = n - 1; s >= 0; --s) {
      const CMatrix f = s == k ? op : CMatrix(CMatrix::Identity(2, 2));
      CMatrix next(full.rows() * 2, full.cols() * 2);
      for (Eigen::Index r = 0; r < full.rows(); ++r)
        for (Eigen::Index c = 0; c < full.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = full(r, c) * f;
      full = next;
    }
    return full;
  };
  const CMatrix ai = site_op(a, i), bj = site_op(b, j);
  return std::abs(psi.dot(ai * bj * psi) - psi.dot(ai * psi) * psi.dot(bj * psi));
}

}  // namespace

TEST_CASE("free chain: the empty collection is the fixed point") {
  Setup s(0.0, 5);
  const auto r = solve_ground_state(s.space, s.ham.full);
  CHECK(r.diag.iterations == 1);
  CHECK(r.frame.energy == 0.0);
  CHECK(r.frame.gs.empty());
}

TEST_CASE("first step puts lambda / 2 on every bond") {
  const double lam = 0.1;
  Setup s(lam, 4);
  const auto step = fixed_point_map(Collection{}, *s.space, s.ham.full);
  CHECK(step.energy == 0.0);
  REQUIRE(step.next.size() == 3);
  for (int x = 0; x < 3; ++x) {
    const CVector& v = step.next.entries.at(SiteMask{3} << x);
    // r_K = -lambda w (x) w and H_{K,0} = 2 on the bond
    CHECK(std::abs(v(0) - lam / 2) < 1e-15);
  }
}

TEST_CASE("converged energy and state agree with exact diagonalization") {
  SUBCASE("lambda 0.1, eight sites") {
    Setup s(0.1, 8);
    const auto r = solve_ground_state(s.space, s.ham.full);
    const double e_ed = dense_spectrum(s.ham.full, false).values(0);
    CHECK(std::abs(r.frame.energy - e_ed) <= 1e-3);
  }
  SUBCASE("lambda 0.05, eight sites, second order") {
    Setup s(0.05, 8);
    const auto r = solve_ground_state(s.space, s.ham.full);
    const double second = -(8 - 1) * 0.05 * 0.05 / 2;
    CHECK(std::abs(r.frame.energy - second) <= 0.1 * std::abs(second));
    for (double q : r.diag.contraction_ratios) CHECK(q < 1.0);
  }
  SUBCASE("lambda 0.1, six sites, fidelity") {
    Setup s(0.1, 6);
    const auto r = solve_ground_state(s.space, s.ham.full);
    const auto ed = dense_spectrum(s.ham.full);
    const double fid = std::norm(ed.vectors.col(0).dot(ground_vector(r.frame)));
    CHECK(fid >= 1 - 1e-5);
  }
}

TEST_CASE("energy error shrinks as the distance bound grows") {
  const auto e_ed = dense_spectrum(Setup(0.1, 8).ham.full, false).values(0);
  double prev = INFINITY;
  for (int dmax : {2, 3, 5}) {
    Setup s(0.1, 8, {4, dmax});
    const double err = std::abs(solve_ground_state(s.space, s.ham.full).frame.energy - e_ed);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("strong perturbations are reported, not silently damped away") {
  Setup s(1.5, 6);
  CHECK_THROWS_AS(solve_ground_state(s.space, s.ham.full), ConvergenceError);
  Setup t(0.8, 6);
  CHECK_THROWS_AS(solve_ground_state(t.space, t.ham.full), ConvergenceError);
}

TEST_CASE("fitted epsilon certifies the weighted bound") {
  Setup s(0.05, 8);
  const auto r = solve_ground_state(s.space, s.ham.full);
  CHECK(r.diag.epsilon > 0.0);
  CHECK(r.diag.epsilon < 1.0);
  CHECK(r.diag.weighted_bound <= 1.0 + 1e-9);
  CHECK(weighted_norm(r.frame.gs, *s.space, 0.99 * r.diag.epsilon, true) > 1.0);
}

TEST_CASE("connected correlations") {
  CMatrix sx(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  const ProductSpace ps(2, 4);

  SUBCASE("product state has none") {
    Setup s(0.0, 4);
    const CVector psi = ground_vector(solve_ground_state(s.space, s.ham.full).frame);
    CHECK(std::abs(connected_correlation(ps, psi, {{0}, sx}, {{2}, sz})) == 0.0);
  }
  SUBCASE("identity operators have none") {
    Setup s(0.1, 4);
    const CVector psi = ground_vector(solve_ground_state(s.space, s.ham.full).frame);
    const CMatrix id = CMatrix::Identity(2, 2);
    CHECK(std::abs(connected_correlation(ps, psi, {{1}, id}, {{2}, id})) < 1e-15);
  }
}

TEST_CASE("sigma-x correlations decay like the exact ones") {
  const double lam = 0.1;
  const int n = 10, origin = 2;
  Setup s(lam, n);
  const auto r = solve_ground_state(s.space, s.ham.full);
  CMatrix sx(2, 2);
  sx << 0, 1, 1, 0;
  const auto scan = decay_scan(r.frame, sx, origin, {1, 2, 3, 4});
  const CVector psi_ed = dense_spectrum(s.ham.full).vectors.col(0);
  for (std::size_t i = 0; i < scan.separations.size(); ++i) {
    const int sep = scan.separations[i];
    const double exact = connected_by_matrices(psi_ed, sx, origin, sx, origin + sep, n);
    CHECK(scan.magnitudes[i] == doctest::Approx(exact).epsilon(0.05));
    if (i > 0) CHECK(scan.magnitudes[i] <= 3 * lam * scan.magnitudes[i - 1]);
  }
  CHECK(scan.slope < std::log(3 * lam));
}

TEST_CASE("linear fit is exact on a line") {
  const auto f = linear_fit({1, 2, 3, 4}, {1.5, -0.5, -2.5, -4.5});
  CHECK(f[0] == doctest::Approx(-2.0));
  CHECK(f[1] == doctest::Approx(3.5));
  CHECK(f[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(linear_fit({1}, {2}), Error);
}
