#pragma once

#include <cstddef>

// Hot inner loops for field arithmetic. Each kernel has a scalar reference
// implementation and an AVX2/FMA variant selected once at startup; the two are
// equivalence-tested against each other.
namespace rdmeta::kernels {

// y <- y + a*x
void axpy(double a, const double* x, double* y, std::size_t n);
// z <- a*x + b*y
void axpby(double a, const double* x, double b, const double* y, double* z, std::size_t n);
// x <- a*x
void scale(double a, double* x, std::size_t n);

double sumsq(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double max_abs(const double* x, std::size_t n);

// f <- u - u^3
void allen_cahn(const double* u, double* f, std::size_t n);
// f <- -mu*u + beta*u^3 - u^5
void quintic(double mu, double beta, const double* u, double* f, std::size_t n);

bool using_avx2();

// Force a specific backend (tests only). kind: 0 = auto, 1 = scalar, 2 = avx2.
void select_backend(int kind);

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
void axpby(double a, const double* x, double b, const double* y, double* z, std::size_t n);
void scale(double a, double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double max_abs(const double* x, std::size_t n);
void allen_cahn(const double* u, double* f, std::size_t n);
void quintic(double mu, double beta, const double* u, double* f, std::size_t n);
}  // namespace scalar

}  // namespace rdmeta::kernels
