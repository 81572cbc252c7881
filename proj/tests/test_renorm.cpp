#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "qpert/groundstate.hpp"
#include "qpert/oracle.hpp"
#include "qpert/renorm.hpp"

using namespace qpert;
using namespace qpert::testing;

namespace {

struct Setup {
  Model model;
  Volume vol;
  Hamiltonian ham;
  std::shared_ptr<const ClusterSpace> space;
  GroundFrame frame;
  Setup(double lambda, int n, Truncation t = {4, 6}, bool solve = true)
      : model(tfi(lambda)),
        vol(Volume::chain(n, Boundary::open)),
        ham(assemble_hamiltonian(vol, model)),
        space(ClusterSpace::create(vol, model, t)) {
    frame.space = space;
    if (solve) frame = solve_ground_state(space, ham.full).frame;
  }
  RenormOperator op(double c2 = 2.5) const { return RenormOperator(frame, ham, model.lambda(), c2); }
};

Collection single(const ClusterVector& u) {
  Collection c;
  c.add(u);
  return c;
}

}  // namespace

TEST_CASE("diagonal part multiplies by cluster energies") {
  Setup s(0.1, 5);
  const auto op = s.op();
  CHECK(op.diagonal(Collection{}).empty());
  const auto d1 = op.diagonal(single(s.space->w_at(2)));
  CHECK(std::abs(d1.entries.at(SiteMask{1} << 2)(0) - 1.0) < 1e-15);
  Collection bond;
  bond.add(0b110, CVector::Ones(1));
  CHECK(std::abs(op.diagonal(bond).entries.at(0b110)(0) - 2.0) < 1e-15);
}

TEST_CASE("without a perturbation the F-map vanishes") {
  Setup s(0.0, 5);
  const auto op = s.op();
  std::mt19937_64 rng(1);
  for (SiteMask m : {SiteMask{0b1}, SiteMask{0b110}, SiteMask{0b10101}})
    CHECK(triple_norm(op.f_map(random_cluster(rng, *s.space, m))) == 0.0);
  const auto a = op.apply(single(s.space->w_at(1)));
  CHECK(std::abs(a.entries.at(0b10)(0) - 1.0) < 1e-15);
}

TEST_CASE("F-map in the free frame is the commutator with the perturbation") {
  const double lam = 0.1;
  Setup s(lam, 5, {4, 8}, false);  // free frame with the perturbed Hamiltonian
  const auto op = s.op();
  const int x = 2;
  // w-hat at site x is sigma^+ there: |1><0| on bit x
  const auto dim = static_cast<Eigen::Index>(s.ham.space.dim());
  CMatrix raise = CMatrix::Zero(dim, dim);
  for (Eigen::Index st = 0; st < dim; ++st)
    if (!(st >> x & 1)) raise(st | (Eigen::Index{1} << x), st) = 1.0;
  const CMatrix phi(s.ham.perturbation);
  const CVector omega0 = CVector::Unit(dim, 0);
  const CVector expect = (phi * raise - raise * phi) * omega0;

  const Collection f = op.f_map(s.space->w_at(x));
  CHECK((to_vector(f, *s.space) - expect).norm() < 1e-14);
  for (const auto& [mask, amps] : f.entries) {
    // neighbour hops and three-site pairs around x, nothing else
    CHECK(s.space->metric().connect_to(mask, SiteMask{1} << x) <= 1);
    CHECK(amps.norm() <= lam * 1.0000001);
  }
  CHECK(f.entries.count(SiteMask{1} << (x - 1)));
  CHECK(f.entries.count(SiteMask{1} << (x + 1)));
}

TEST_CASE("renormalized operator is the frame conjugate of H - E") {
  Setup s(0.1, 4, {4, 12});  // nothing truncated on four sites
  const auto op = s.op();
  std::mt19937_64 rng(3);
  const Collection c = random_collection(rng, *s.space, 4, 0.3);
  const CVector v = reconstruct(c, s.frame.gs, *s.space);
  const CVector hv = s.ham.full * v - s.frame.energy * v;
  const Collection expect = frame_components(hv, s.frame.gs, *s.space);
  CHECK(distance(op.apply(c), expect) <= 1e-8);

  Collection vac;
  vac.scalar = 1.0;
  CHECK(distance(op.apply(vac), Collection{}) <= 1e-8);
  CHECK(op.apply(Collection{}).empty());
}

TEST_CASE("resolvent of the free operator") {
  Setup s(0.0, 4);
  const auto op = s.op();
  const auto r = op.resolvent(single(s.space->w_at(1)), Complex(0.5, 0.0));
  CHECK(std::abs(r.value.entries.at(0b10)(0) - 2.0) < 1e-15);
}

TEST_CASE("resolvent solves (H - z) x = u with geometric terms") {
  const double lam = 0.1;
  Setup s(lam, 4, {4, 12});
  const auto op = s.op();
  const Complex z(0.5, 0.0);
  const Collection u = single(s.space->w_at(1));
  ResolventOptions ro;
  ro.k_max = 40;
  ro.early_stop = 1e-15;
  const auto r = op.resolvent(u, z, ro);
  const Collection lhs = op.apply(r.value) - z * r.value;
  CHECK(distance(lhs, u) <= 1e-10);
  // ratio bound c lambda max_a a / |a - z| with a = 1 the worst level
  const double scale = lam * 1.0 / std::abs(1.0 - z);
  for (std::size_t k = 1; k < r.term_norms.size(); ++k)
    if (r.term_norms[k - 1] > 1e-13) CHECK(r.term_norms[k] / r.term_norms[k - 1] <= 5.0 * scale);
}

TEST_CASE("admissibility disks around free levels") {
  Setup s(0.1, 4);
  const auto op = s.op(2.5);
  CHECK_THROWS_AS(op.check_admissible(Complex(1.1, 0.0)), AdmissibilityError);
  CHECK_THROWS_AS(op.check_admissible(Complex(2.3, 0.1)), AdmissibilityError);
  CHECK_NOTHROW(op.check_admissible(Complex(0.6, 0.0)));
  CHECK_NOTHROW(op.check_contour(default_contour(s.model)));
  CHECK_THROWS_AS(op.check_contour(Contour{1.0, 0.2, 32}), AdmissibilityError);
  CHECK(default_contour(s.model).radius == doctest::Approx(0.4));
}

TEST_CASE("spectral projector in the free case") {
  Setup s(0.0, 4);
  const auto op = s.op();
  const Contour ct = default_contour(s.model);
  const Collection w = single(s.space->w_at(2));
  CHECK(distance(op.project(w, ct), w) < 1e-12);
  Collection pair;
  pair.add(0b0110, CVector::Ones(1));
  CHECK(triple_norm(op.project(pair, ct)) < 1e-12);
}

TEST_CASE("spectral projector is idempotent and thread count does not matter") {
  Setup s(0.1, 6);
  const auto op = s.op();
  const Contour ct = default_contour(s.model);
  const Collection u = single(s.space->w_at(2));
  const Collection p1 = op.project(u, ct);
  const Collection p2 = op.project(p1, ct);
  CHECK(distance(p1, p2) <= 1e-6);
  const Collection p4 = op.project(u, ct, {}, 4);
  CHECK(distance(p1, p4) == 0.0);
}

TEST_CASE("projected vector lies in the exact one-particle eigenspace") {
  Setup s(0.1, 6, {6, 12});  // untruncated: only the series and quadrature errors remain
  const auto op = s.op();
  const Collection p = op.project(single(s.space->w_at(2)), default_contour(s.model));
  const CVector v = op.realize(p);
  // ED projector onto eigenvalues of H - E inside the contour
  const auto ed = dense_spectrum(s.ham.full);
  CMatrix basis(v.size(), 0);
  for (Eigen::Index i = 0; i < ed.values.size(); ++i) {
    const double e = ed.values(i) - ed.values(0);
    if (std::abs(e - 1.0) < 0.4) {
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = ed.vectors.col(i);
    }
  }
  CHECK(basis.cols() == 6);
  const CVector inside = basis * (basis.adjoint() * v);
  CHECK((v - inside).norm() <= 1e-6 * v.norm());
}

TEST_CASE("localization fit") {
  const RVector levels = (RVector(2) << 0.0, 1.0).finished();
  const auto free_fit = localization_fit({0.0, 1.0, 1.0, 2.0}, levels, 2, 0.1);
  CHECK(free_fit.c2 == doctest::Approx(0.0));
  CHECK(free_fit.gap == doctest::Approx(1.0));

  double c2_max = 0.0;
  for (int n : {6, 8}) {
    Setup s(0.1, n, {4, 6}, false);
    const auto ed = dense_spectrum(s.ham.full, false);
    std::vector<double> shifted;
    for (Eigen::Index i = 0; i < ed.values.size(); ++i) shifted.push_back(ed.values(i) - ed.values(0));
    const auto fit = localization_fit(shifted, s.model.energies(), n, 0.1);
    c2_max = std::max(c2_max, fit.c2);
    CHECK(fit.gap >= 1 - 3 * 0.1);
  }
  CHECK(c2_max <= 2.5);
}
