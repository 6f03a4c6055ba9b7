#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "rdmeta/kernels.hpp"

using namespace rdmeta;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match hand-rolled loops") {
  const auto x = random_vec(37, 1), y0 = random_vec(37, 2);
  auto y = y0;
  kernels::scalar::axpy(2.5, x.data(), y.data(), y.size());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(y0[i] + 2.5 * x[i]));

  std::vector<double> z(37);
  kernels::scalar::axpby(1.5, x.data(), -0.5, y0.data(), z.data(), z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    CHECK(z[i] == doctest::Approx(1.5 * x[i] - 0.5 * y0[i]));

  double ss = 0, dd = 0, ma = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss += x[i] * x[i];
    dd += x[i] * y0[i];
    ma = std::max(ma, std::fabs(x[i]));
  }
  CHECK(kernels::scalar::sumsq(x.data(), x.size()) == doctest::Approx(ss).epsilon(1e-12));
  CHECK(kernels::scalar::dot(x.data(), y0.data(), x.size()) == doctest::Approx(dd).epsilon(1e-12));
  CHECK(kernels::scalar::max_abs(x.data(), x.size()) == ma);
}

TEST_CASE("reaction kernels evaluate the closed forms") {
  const double u[4] = {-2.0, -0.5, 0.0, 1.5};
  double f[4];
  kernels::scalar::allen_cahn(u, f, 4);
  for (int i = 0; i < 4; ++i) CHECK(f[i] == doctest::Approx(u[i] - u[i] * u[i] * u[i]));
  kernels::scalar::quintic(0.5, 4.0, u, f, 4);
  for (int i = 0; i < 4; ++i) {
    const double v = u[i];
    CHECK(f[i] == doctest::Approx(-0.5 * v + 4.0 * v * v * v - v * v * v * v * v));
  }
}

TEST_CASE("dispatched backend agrees with the scalar reference") {
  // sizes straddling the vector width, including remainders
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 31u, 64u, 129u, 257u}) {
    const auto x = random_vec(n, 10 + n), yb = random_vec(n, 20 + n);

    auto y1 = yb, y2 = yb;
    kernels::select_backend(1);
    kernels::axpy(1.25, x.data(), y1.data(), n);
    kernels::select_backend(0);
    kernels::axpy(1.25, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));

    kernels::select_backend(1);
    const double s1 = kernels::sumsq(x.data(), n);
    const double d1 = kernels::dot(x.data(), yb.data(), n);
    const double m1 = kernels::max_abs(x.data(), n);
    kernels::select_backend(0);
    const double s2 = kernels::sumsq(x.data(), n);
    const double d2 = kernels::dot(x.data(), yb.data(), n);
    const double m2 = kernels::max_abs(x.data(), n);
    CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
    CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
    CHECK(m1 == m2);

    std::vector<double> f1(n), f2(n);
    kernels::select_backend(1);
    kernels::allen_cahn(x.data(), f1.data(), n);
    kernels::select_backend(0);
    kernels::allen_cahn(x.data(), f2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(f1[i] == doctest::Approx(f2[i]).epsilon(1e-14));

    kernels::select_backend(1);
    kernels::quintic(0.5, 4.0, x.data(), f1.data(), n);
    kernels::select_backend(0);
    kernels::quintic(0.5, 4.0, x.data(), f2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(f1[i] == doctest::Approx(f2[i]).epsilon(1e-14));
  }
  kernels::select_backend(0);
}

TEST_CASE("forcing the avx2 backend works where supported") {
  if (!kernels::using_avx2()) return;  // scalar-only host; dispatch test above still ran
  kernels::select_backend(2);
  const auto x = random_vec(100, 42);
  CHECK(kernels::sumsq(x.data(), x.size()) ==
        doctest::Approx(kernels::scalar::sumsq(x.data(), x.size())).epsilon(1e-12));
  kernels::select_backend(0);
}
