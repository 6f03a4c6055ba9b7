#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "rdmeta/grid.hpp"

using namespace rdmeta;

namespace {

OperatorDisc laplacian(double L, int M) {
  GridSpec g = make_grid(L, M, 1);
  return OperatorDisc::build({EllipticCoeffs{[](double) { return 1.0; }, nullptr}}, g);
}

Field random_field(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field x(g);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
  return x;
}

Field eigvec(const OperatorDisc& op, int k) {
  Field e(op.grid());
  for (int j = 0; j < op.grid().interior_points_M; ++j) e.at(0, j) = op.eigenvectors(0)(j, k);
  return e;
}

}  // namespace

TEST_CASE("grid invariants") {
  GridSpec g = make_grid(5.0, 199, 1);
  CHECK(g.spacing() * (g.interior_points_M + 1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(g.node(0) == doctest::Approx(g.spacing()));
  CHECK_THROWS_AS(make_grid(5.0, 2, 1), Error);
  CHECK_THROWS_AS(make_grid(-1.0, 9, 1), Error);
  CHECK_THROWS_AS(make_grid(5.0, 9, 0), Error);
}

TEST_CASE("constant-coefficient matrix is the 3-point Laplacian") {
  OperatorDisc op = laplacian(5.0, 199);
  const double dx2 = op.grid().spacing() * op.grid().spacing();
  const Tridiag& T = op.matrix(0);
  for (int j = 0; j < 199; ++j) CHECK(T.diag[j] == doctest::Approx(-2.0 / dx2));
  for (int j = 0; j < 198; ++j) {
    CHECK(T.lower[j] == doctest::Approx(1.0 / dx2));
    CHECK(T.upper[j] == doctest::Approx(1.0 / dx2));
  }
}

TEST_CASE("discrete spectrum converges to the Dirichlet sines at second order") {
  const double a1 = std::pow(M_PI / 5.0, 2);
  double prev_err[3] = {0, 0, 0};
  int idx = 0;
  for (int M : {49, 99, 199}) {
    OperatorDisc op = laplacian(5.0, M);
    for (int k = 1; k <= 3; ++k) {
      const double exact = k * k * a1;
      const double err = std::fabs(op.alphas(0)[k - 1] - exact);
      if (idx > 0) {
        // halving dx should divide the error by ~4
        const double ratio = prev_err[k - 1] / err;
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.0);
      }
      prev_err[k - 1] = err;
    }
    ++idx;
  }
  OperatorDisc op = laplacian(5.0, 199);
  CHECK(op.alphas(0)[0] == doctest::Approx(a1).epsilon(2e-4));
}

TEST_CASE("apply_A on eigenvectors and smooth fields") {
  OperatorDisc op = laplacian(5.0, 199);
  Field e1 = eigvec(op, 0);
  Field Ae = apply_A(op, e1);
  const double a1 = op.alphas(0)[0];
  for (int j = 0; j < 199; ++j)
    CHECK(Ae.at(0, j) == doctest::Approx(-a1 * e1.at(0, j)).epsilon(1e-9));

  CHECK(sup_norm(apply_A(op, Field(op.grid()))) == 0.0);

  Field s = sample_field(op.grid(), [](double xi) { return std::sin(M_PI * xi / 5.0); });
  Field As = apply_A(op, s);
  const double cont = std::pow(M_PI / 5.0, 2);
  double err = 0.0;
  for (int j = 0; j < 199; ++j)
    err = std::max(err, std::fabs(As.at(0, j) + cont * s.at(0, j)));
  CHECK(err < 10.0 * op.grid().spacing() * op.grid().spacing());

  Field wrong(make_grid(5.0, 49, 1));
  CHECK_THROWS_AS(apply_A(op, wrong), ShapeMismatch);
}

TEST_CASE("implicit_solve: eigen identity and residual") {
  OperatorDisc op = laplacian(5.0, 99);
  const double dt = 0.01;
  Field e2 = eigvec(op, 1);
  Field y = implicit_solve(op, dt, e2);
  const double a2 = op.alphas(0)[1];
  for (int j = 0; j < 99; ++j)
    CHECK(y.at(0, j) == doctest::Approx(e2.at(0, j) / (1.0 + dt * a2)).epsilon(1e-10));

  CHECK(sup_norm(implicit_solve(op, dt, Field(op.grid()))) == 0.0);

  Field rhs = random_field(op.grid(), 3);
  Field x = implicit_solve(op, dt, rhs);
  Field back = x - dt * apply_A(op, x);
  CHECK(sup_norm(back - rhs) < 1e-10);
}

TEST_CASE("semigroup: identity, eigen decay, composition") {
  OperatorDisc op = laplacian(5.0, 99);
  Field x = random_field(op.grid(), 4);
  CHECK(sup_norm(semigroup_apply(op, 0.0, x) - x) == 0.0);

  Field e1 = eigvec(op, 0);
  Field s1 = semigroup_apply(op, 1.0, e1);
  const double decay = std::exp(-op.alphas(0)[0]);
  for (int j = 0; j < 99; ++j)
    CHECK(s1.at(0, j) == doctest::Approx(decay * e1.at(0, j)).epsilon(1e-10));

  Field ab = semigroup_apply(op, 0.7, semigroup_apply(op, 0.3, x));
  Field once = semigroup_apply(op, 1.0, x);
  CHECK(sup_norm(ab - once) < 1e-10);
}

TEST_CASE("semigroup smoothing constant is grid-stable") {
  // sup_t t^{1/4} |S(t)x|_E / |x|_H bounded by one constant across refinements
  double fit_C = 0.0;
  for (int M : {49, 99, 199}) {
    OperatorDisc op = laplacian(5.0, M);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Field x = random_field(op.grid(), 100 + trial);
      const double hn = h_norm(x);
      for (double t : {0.01, 0.03, 0.1, 0.3, 1.0}) {
        const double v = std::pow(t, 0.25) * sup_norm(semigroup_apply(op, t, x)) / hn;
        worst = std::max(worst, v);
      }
    }
    if (M == 49) fit_C = 1.5 * worst;  // fit on the coarse grid, assert on refinements
    CHECK(worst <= fit_C);
  }
}

TEST_CASE("sobolev_norm: Parseval, eigen value, monotonicity") {
  OperatorDisc op = laplacian(5.0, 99);
  Field x = random_field(op.grid(), 5);
  CHECK(sobolev_norm(x, 0.0, op) == doctest::Approx(h_norm(x)).epsilon(1e-12));

  Field e1 = eigvec(op, 0);
  CHECK(sobolev_norm(e1, 1.0, op) == doctest::Approx(std::sqrt(op.alphas(0)[0])).epsilon(1e-10));

  // rough sawtooth-like field: higher delta weights high modes more
  Field saw = sample_field(op.grid(), [](double xi) { return std::fmod(xi, 0.5) - 0.25; });
  const double n0 = sobolev_norm(saw, 0.0, op);
  const double n05 = sobolev_norm(saw, 0.5, op);
  const double n1 = sobolev_norm(saw, 1.0, op);
  CHECK(n0 < n05);
  CHECK(n05 < n1);
}

TEST_CASE("norms: quadrature and embedding") {
  GridSpec g = make_grid(5.0, 99, 1);
  Field zero(g);
  CHECK(sup_norm(zero) == 0.0);
  CHECK(h_norm(zero) == 0.0);

  Field one(g);
  one.fill(1.0);
  CHECK(sup_norm(one) == 1.0);
  CHECK(h_norm(one) == doctest::Approx(std::sqrt(5.0 * 99.0 / 100.0)).epsilon(1e-12));

  for (int trial = 0; trial < 1000; ++trial) {
    Field x = random_field(g, 1000 + trial);
    CHECK(h_norm(x) <= std::sqrt(5.0) * sup_norm(x) * (1.0 + 1e-12));
  }
}

TEST_CASE("two-component fields use the Euclidean node norm") {
  GridSpec g = make_grid(2.0, 9, 2);
  Field x(g);
  x.at(0, 4) = 3.0;
  x.at(1, 4) = 4.0;
  CHECK(sup_norm(x) == doctest::Approx(5.0));
}

TEST_CASE("variable diffusion coefficient keeps symmetry and positivity") {
  GridSpec g = make_grid(5.0, 99, 1);
  OperatorDisc op = OperatorDisc::build(
      {EllipticCoeffs{[](double xi) { return 1.0 + 0.5 * std::sin(M_PI * xi / 5.0); }, nullptr}},
      g);
  CHECK(op.symmetric());
  CHECK(op.has_eigen());
  const Tridiag& T = op.matrix(0);
  for (int j = 0; j < 98; ++j) CHECK(T.lower[j] == doctest::Approx(T.upper[j]).epsilon(1e-14));
  for (int k = 0; k < 99; ++k) CHECK(op.alphas(0)[k] > 0.0);
}

TEST_CASE("nonzero drift coefficient disables spectral features") {
  GridSpec g = make_grid(5.0, 49, 1);
  OperatorDisc op = OperatorDisc::build(
      {EllipticCoeffs{[](double) { return 1.0; }, [](double) { return 0.3; }}}, g);
  CHECK_FALSE(op.symmetric());
  CHECK_FALSE(op.has_eigen());
  Field x = random_field(g, 6);
  CHECK_THROWS_AS(semigroup_apply(op, 1.0, x), EigenUnavailable);
  CHECK_THROWS_AS(sobolev_norm(x, 0.5, op), EigenUnavailable);
  // implicit solve still works
  Field y = implicit_solve(op, 0.01, x);
  Field back = y - 0.01 * apply_A(op, y);
  CHECK(sup_norm(back - x) < 1e-10);
}

TEST_CASE("non-elliptic coefficient rejected") {
  GridSpec g = make_grid(5.0, 49, 1);
  CHECK_THROWS_AS(
      OperatorDisc::build({EllipticCoeffs{[](double xi) { return 1.0 - xi; }, nullptr}}, g),
      NonElliptic);
}

// Exact per-mode evaluation of the convolution Lambda u(t) = int_0^t S(t-s) u(s) ds
// for piecewise-constant u, via c_{m+1} = e^{-a dt} c_m + u_m (1 - e^{-a dt})/a.
TEST_CASE("convolution regularity bounds hold for random piecewise-constant controls") {
  OperatorDisc op = laplacian(5.0, 49);
  const int M = 49, Nt = 40;
  const double dt = 0.05;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int trial = 0; trial < 20; ++trial) {
    // mode coefficients of u on each step
    std::vector<std::vector<double>> umodes(Nt, std::vector<double>(M));
    double energy = 0.0;  // int |u|_H^2 dt
    for (int m = 0; m < Nt; ++m) {
      Field u(op.grid());
      for (int i = 0; i < u.size(); ++i) u.data()[i] = gauss(rng);
      Eigen::VectorXd c = op.mode_coeffs(0, u.comp(0));
      for (int k = 0; k < M; ++k) umodes[m][k] = c[k];
      const double hn = h_norm(u);
      energy += dt * hn * hn;
    }

    std::vector<double> c(M, 0.0);  // Lambda u modes at step ends
    double sup_h1 = 0.0, int_h2 = 0.0;
    for (int m = 0; m < Nt; ++m) {
      double h1 = 0.0;
      for (int k = 0; k < M; ++k) {
        const double a = op.alphas(0)[k];
        const double e = std::exp(-a * dt);
        const double B = umodes[m][k] / a;  // within-step limit value
        const double D = c[k] - B;
        // exact int over the step of a^2 c(t)^2, c(t) = B + D e^{-a s}
        int_h2 += a * a *
                  (B * B * dt + 2.0 * B * D * (1.0 - e) / a + D * D * (1.0 - e * e) / (2.0 * a));
        c[k] = B + D * e;
        h1 += a * c[k] * c[k];
      }
      sup_h1 = std::max(sup_h1, h1);
    }
    CHECK(sup_h1 <= 0.5 * energy * (1.0 + 1e-9));
    CHECK(int_h2 <= energy * (1.0 + 1e-9));
  }
}

TEST_CASE("heat-semigroup energy identity (H2 time integral vs H1 decay)") {
  OperatorDisc op = laplacian(5.0, 99);
  for (int trial = 0; trial < 20; ++trial) {
    Field x = random_field(op.grid(), 500 + trial);
    for (double t : {0.1, 1.0, 5.0}) {
      // per-mode closed form: int_0^t |S(s)x|_{H2}^2 ds = sum a_k x_k^2 (1 - e^{-2 a_k t})/2
      double lhs = 0.0;
      Eigen::VectorXd c = op.mode_coeffs(0, x.comp(0));
      for (int k = 0; k < 99; ++k) {
        const double a = op.alphas(0)[k];
        lhs += a * c[k] * c[k] * (1.0 - std::exp(-2.0 * a * t)) / 2.0;
      }
      const double h1_0 = sobolev_norm(x, 1.0, op);
      const double h1_t = sobolev_norm(semigroup_apply(op, t, x), 1.0, op);
      const double rhs = 0.5 * (h1_0 * h1_0 - h1_t * h1_t);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
  }
}
