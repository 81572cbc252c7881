#include <doctest.h>

#include <string>

#include "fixtures.hpp"
#include "qpert/config.hpp"

using namespace qpert;
using namespace qpert::testing;

namespace {

const char* kExplicitIsing = R"(
# h = diag(0, 1), phi = -0.1 sx (x) sx
nu = 1
sites = 6
local.h = [0, 0,
           0, 1]
pert.offsets = [0, 1]
pert.phi = [0, 0, 0, 1,
            0, 0, 1, 0,
            0, 1, 0, 0,
            1, 0, 0, 0]
pert.scale = -0.1
)";

std::string error_of(const std::string& text) {
  try {
    Config::parse(text, "t.cfg");
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parser rejects what it does not understand") {
  CHECK(error_of("nu = 1\nfoo = 2\n") == "t.cfg:2: unknown key 'foo'");
  CHECK(error_of("lambda = 0.1\nlambda = 0.2\n") == "t.cfg:2: duplicate key 'lambda'");
  CHECK(error_of("lambda 0.1\n") == "t.cfg:1: expected 'key = value'");
  CHECK(error_of("box = [4, 4\n") == "t.cfg:1: unbalanced brackets");
  CHECK(error_of("lambda =\n") == "t.cfg:1: empty key or value");
  CHECK_THROWS_AS(Config::load("/nonexistent/x.cfg"), Error);
  const Config c = Config::parse("lambda = abc\ngs.max_iter = 2.5\ncone.power = maybe\n");
  CHECK_THROWS_AS(c.num("lambda"), Error);
  CHECK_THROWS_AS(c.integer("gs.max_iter", 0), Error);
  CHECK_THROWS_AS(c.boolean("cone.power", false), Error);
  CHECK_THROWS_AS(c.num("nu"), Error);
}

TEST_CASE("values, comments and lists") {
  const Config c = Config::parse(
      "lambda = 0.1  # trailing comment\n"
      "preset = \"tfi # not a comment\"\n"
      "box = [4,\n  6]\n"
      "resolvent.early_stop = true\n");
  CHECK(c.num("lambda") == 0.1);
  CHECK(c.str("preset") == "tfi # not a comment");
  CHECK(c.list("box") == std::vector<double>{4, 6});
  CHECK(c.boolean("resolvent.early_stop", false));
  CHECK(c.num("gs.tol", 1e-9) == 1e-9);
  CHECK(c.list("ed.times", {1.0}) == std::vector<double>{1.0});
  CHECK(split_list("[[1, 2], [3]]") == std::vector<std::string>{"1", "2", "3"});
}

TEST_CASE("complex literals") {
  CHECK(parse_complex("1+2i") == Complex(1, 2));
  CHECK(parse_complex("-i") == Complex(0, -1));
  CHECK(parse_complex("2i") == Complex(0, 2));
  CHECK(parse_complex("-3.5") == Complex(-3.5, 0));
  CHECK(parse_complex("1e-3+2e-4i") == Complex(1e-3, 2e-4));
  CHECK(parse_complex("1e-3-i") == Complex(1e-3, -1));
  CHECK_THROWS_AS(parse_complex(""), Error);
  CHECK(parse_complex("1+2j") == Complex(1, 2));
  CHECK_THROWS_AS(parse_complex("1+2k"), Error);
}

TEST_CASE("explicit Ising model equals the preset") {
  const Config explicit_cfg = Config::parse(kExplicitIsing);
  const Config preset_cfg = Config::parse("nu = 1\nsites = 6\npreset = tfi\nlambda = 0.1\n");
  const Model a = build_model(explicit_cfg), b = build_model(preset_cfg);
  CHECK(a.lambda() == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(a.mu() == 1.0);
  const Volume v = build_volume(explicit_cfg);
  CHECK(v.size() == 6);
  const SparseMatrix d = assemble_hamiltonian(v, a).full - assemble_hamiltonian(v, b).full;
  CHECK(CMatrix(d).norm() <= 1e-14);
}

TEST_CASE("model and volume keys are checked") {
  CHECK_THROWS_AS(build_model(Config::parse("preset = tfi\nlambda = 0.1\npert.scale = 2\n")), ModelError);
  CHECK_THROWS_AS(build_model(Config::parse("preset = xy\n")), ModelError);
  CHECK_THROWS_AS(build_model(Config::parse(std::string(kExplicitIsing) + "lambda = 0.1\n")), ModelError);
  CHECK_THROWS_AS(build_model(Config::parse("local.h = [0, 1, 1]\npert.offsets = [0, 1]\npert.phi = [1]\n")),
                  ModelError);
  CHECK_THROWS_AS(build_model(Config::parse("local.h = [0, 0, 0, 1]\nlocal.mu_index = 2\n"
                                            "pert.offsets = [0, 1]\npert.phi = [0,0,0,0, 0,0,0,0, 0,0,0,0, 0,0,0,0]\n")),
                  ModelError);
  CHECK_THROWS_AS(build_volume(Config::parse("nu = 2\nbox = [4]\n")), ModelError);
  CHECK_THROWS_AS(build_volume(Config::parse("nu = 1\nsites = [0, 1, 2]\nboundary = periodic\n")), ModelError);
  CHECK(build_volume(Config::parse("nu = 2\nbox = [3, 4]\nboundary = periodic\n")).size() == 12);
  CHECK(build_volume(Config::parse("nu = 2\nsites = [0, 0, 0, 1, 1, 1]\n")).size() == 3);
}

TEST_CASE("solver options and contour") {
  const Config c = Config::parse(
      "preset = tfi\nlambda = 0.1\ntrunc.k_max = 3\ntrunc.d_max = 5\ngs.tol = 1e-11\n"
      "resolvent.k_max = 12\ncontour.radius = 0.3\n");
  const Truncation t = build_truncation(c);
  CHECK(t.k_max == 3);
  CHECK(t.d_max == 5);
  CHECK(build_gs_options(c).tol == 1e-11);
  CHECK(build_resolvent_options(c).k_max == 12);
  const Contour ct = build_contour(c, build_model(c));
  CHECK(ct.center == 1.0);
  CHECK(ct.radius == 0.3);
  CHECK(build_contour(Config::parse("preset = tfi\nlambda = 0.1\n"), build_model(c)).radius ==
        doctest::Approx(0.4));
}

TEST_CASE("echo and hash are canonical") {
  const Config a = Config::parse("lambda = 0.1\nnu = 1  # one\n");
  const Config b = Config::parse("nu = 1\n\n   lambda   =   0.1\n");
  CHECK(a.echo() == b.echo());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != Config::parse("nu = 1\nlambda = 0.2\n").hash());
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  Config c = a;
  c.set("sites", "8");
  CHECK(c.integer("sites", 0) == 8);
  CHECK_THROWS_AS(c.set("bogus", "1"), Error);
}
