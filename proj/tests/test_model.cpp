#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "rdmeta/model.hpp"

using namespace rdmeta;

namespace {

Field random_field(const GridSpec& g, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  Field x(g);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
  return x;
}

}  // namespace

TEST_CASE("built-in model library") {
  for (const std::string& name : builtin_model_names()) {
    ModelSpec m = make_model(name);
    CHECK(m.name == name);
    CHECK(m.r >= 1);
  }
  CHECK_THROWS_AS(make_model("no-such-model"), Error);
}

TEST_CASE("parameter overrides reach the model") {
  ModelSpec m = make_model("allen-cahn", {{"L", 7.0}, {"lambda", 0.25}});
  CHECK(m.length_L == doctest::Approx(7.0));
  CHECK(m.lambda == doctest::Approx(0.25));
}

TEST_CASE("eval_F matches the cubic pointwise") {
  ModelSpec m = make_model("allen-cahn");
  GridSpec g = make_grid(m.length_L, 49, 1);
  Field x = random_field(g, 1, 2.0);
  Field f = eval_F(m, x);
  for (int j = 0; j < 49; ++j) {
    const double u = x.at(0, j);
    CHECK(f.at(0, j) == doctest::Approx(u - u * u * u).epsilon(1e-14));
  }
}

TEST_CASE("reaction jacobian agrees with finite differences") {
  for (const std::string& name : {"allen-cahn", "quintic", "coupled-cubic"}) {
    ModelSpec m = make_model(name);
    std::vector<double> x(m.r), fx(m.r), fx2(m.r), jac(m.r * m.r);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : x) v = gauss(rng);
    m.reaction_jacobian(x.data(), jac.data());
    const double h = 1e-6;
    for (int k = 0; k < m.r; ++k) {
      auto xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      m.reaction(xp.data(), fx.data());
      m.reaction(xm.data(), fx2.data());
      for (int i = 0; i < m.r; ++i) {
        const double fd = (fx[i] - fx2[i]) / (2.0 * h);
        CHECK(jac[i * m.r + k] == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("identity diffusion passes controls through unchanged") {
  ModelSpec m = make_model("allen-cahn");
  GridSpec g = make_grid(m.length_L, 29, 1);
  Field x = random_field(g, 3), h = random_field(g, 4);
  CHECK(sup_norm(apply_G(m, x, h) - h) == 0.0);
  CHECK(sup_norm(apply_G_inverse(m, x, h) - h) == 0.0);
  CHECK(sup_norm(apply_G_transpose_inverse(m, x, h) - h) == 0.0);
  CHECK(diffusion_is_identity(m));
}

TEST_CASE("state-dependent scalar diffusion: inverse round-trips") {
  ModelSpec m = make_model("allen-cahn-mult");
  CHECK_FALSE(diffusion_is_identity(m));
  GridSpec g = make_grid(m.length_L, 29, 1);
  Field x = random_field(g, 5), h = random_field(g, 6);
  Field gh = apply_G(m, x, h);
  // pointwise g(u) = 1 + 0.25 tanh(u)
  for (int j = 0; j < 29; ++j)
    CHECK(gh.at(0, j) ==
          doctest::Approx((1.0 + 0.25 * std::tanh(x.at(0, j))) * h.at(0, j)).epsilon(1e-14));
  CHECK(sup_norm(apply_G_inverse(m, x, gh) - h) < 1e-12);
  // scalar diffusion: transpose-inverse equals inverse
  CHECK(sup_norm(apply_G_transpose_inverse(m, x, gh) - h) < 1e-12);
}

TEST_CASE("matrix diffusion uses a full linear solve per node") {
  ModelSpec m = make_model("coupled-cubic");
  // non-symmetric constant matrix g = [[2,1],[0,1]]
  m.g_kind = DiffusionKind::Custom;
  m.diffusion = [](const double*, double* g) {
    g[0] = 2.0;
    g[1] = 1.0;
    g[2] = 0.0;
    g[3] = 1.0;
  };
  GridSpec g = make_grid(m.length_L, 19, 2);
  Field x = random_field(g, 7), h = random_field(g, 8);
  Field gh = apply_G(m, x, h);
  for (int j = 0; j < 19; ++j) {
    CHECK(gh.at(0, j) == doctest::Approx(2.0 * h.at(0, j) + h.at(1, j)).epsilon(1e-13));
    CHECK(gh.at(1, j) == doctest::Approx(h.at(1, j)).epsilon(1e-13));
  }
  CHECK(sup_norm(apply_G_inverse(m, x, gh) - h) < 1e-12);
  // transpose-inverse: G^T y = h  =>  y0 = h0/2, y1 = h1 - h0/2
  Field y = apply_G_transpose_inverse(m, x, h);
  for (int j = 0; j < 19; ++j) {
    CHECK(y.at(0, j) == doctest::Approx(0.5 * h.at(0, j)).epsilon(1e-13));
    CHECK(y.at(1, j) == doctest::Approx(h.at(1, j) - 0.5 * h.at(0, j)).epsilon(1e-13));
  }
}

TEST_CASE("singular diffusion reported") {
  ModelSpec m = make_model("coupled-cubic");
  m.g_kind = DiffusionKind::Custom;
  m.diffusion = [](const double*, double* g) { g[0] = g[1] = g[2] = g[3] = 0.0; };
  GridSpec g = make_grid(m.length_L, 9, 2);
  Field x(g), h(g);
  h.fill(1.0);
  CHECK_THROWS_AS(apply_G_inverse(m, x, h), SingularDiffusion);
}

TEST_CASE("non-finite reaction output detected") {
  ModelSpec m = make_model("allen-cahn");
  GridSpec g = make_grid(m.length_L, 9, 1);
  Field x(g);
  x.at(0, 4) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(eval_F(m, x), NonFiniteOutput);
}

TEST_CASE("assumption validation passes for the library models") {
  for (const std::string& name : {"allen-cahn", "allen-cahn-mult", "quintic", "coupled-cubic"}) {
    ValidationReport rep = validate_assumptions(make_model(name), 5.0, 300);
    for (const CheckResult& c : rep.checks) {
      INFO(name, ": ", c.name, ": ", c.detail);
      CHECK(c.passed);
    }
    CHECK(rep.all_passed());
  }
}

TEST_CASE("a non-dissipative drift fails validation") {
  ValidationReport rep = validate_assumptions(make_model("linear"), 5.0, 300);
  CHECK_FALSE(rep.all_passed());
  bool dissipativity_failed = false;
  for (const CheckResult& c : rep.checks)
    if (!c.passed && c.name.find("dissip") != std::string::npos) dissipativity_failed = true;
  CHECK(dissipativity_failed);
}

TEST_CASE("reaction lipschitz estimate grows with the radius") {
  ModelSpec m = make_model("allen-cahn");
  CHECK(m.reaction_lipschitz(1.0) > 0.0);
  CHECK(m.reaction_lipschitz(10.0) > m.reaction_lipschitz(1.0));
}
