#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rdmeta/errors.hpp"

namespace rdmeta {

/// Uniform interior grid on [0,L] with homogeneous Dirichlet boundary.
/// Boundary nodes are implicit and never stored.
struct GridSpec {
  double length_L = 1.0;
  int interior_points_M = 0;
  int components_r = 1;

  double spacing() const { return length_L / (interior_points_M + 1); }
  double node(int j) const { return spacing() * (j + 1); }  // j in [0, M)
  int size() const { return interior_points_M * components_r; }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.length_L == b.length_L && a.interior_points_M == b.interior_points_M &&
           a.components_r == b.components_r;
  }
};

GridSpec make_grid(double L, int M, int r = 1);

/// r-component field sampled on the interior grid; value semantics.
class Field {
 public:
  Field() = default;
  explicit Field(const GridSpec& g) : grid_(g), v_(g.size(), 0.0) {}

  const GridSpec& grid() const { return grid_; }
  int components() const { return grid_.components_r; }
  int nodes() const { return grid_.interior_points_M; }
  int size() const { return static_cast<int>(v_.size()); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double* comp(int i) { return v_.data() + static_cast<std::size_t>(i) * nodes(); }
  const double* comp(int i) const { return v_.data() + static_cast<std::size_t>(i) * nodes(); }

  double& at(int i, int j) { return v_[static_cast<std::size_t>(i) * nodes() + j]; }
  double at(int i, int j) const { return v_[static_cast<std::size_t>(i) * nodes() + j]; }

  void fill(double c) { std::fill(v_.begin(), v_.end(), c); }
  bool finite() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double c);

 private:
  GridSpec grid_;
  std::vector<double> v_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double c, Field a);

/// Samples a function of xi (and component) onto the grid.
Field sample_field(const GridSpec& g, const std::function<double(int comp, double xi)>& fn);
Field sample_field(const GridSpec& g, const std::function<double(double xi)>& fn);

double sup_norm(const Field& x);
double h_norm(const Field& x);
double h_inner(const Field& x, const Field& y);

struct Tridiag {
  std::vector<double> lower, diag, upper;  // lower/upper have size M-1
};

/// Per-component coefficients of the elliptic operator a(xi) d^2 + b(xi) d.
struct EllipticCoeffs {
  std::function<double(double)> a;
  std::function<double(double)> b;  // null means b == 0
};

/// Discretized elliptic operator A with Dirichlet rows eliminated. When the
/// operator is self-adjoint (b == 0, divergence-form assembly) the spectrum
/// (alpha_k, e_k) is available and powers the semigroup and Sobolev norms.
class OperatorDisc {
 public:
  static OperatorDisc build(const std::vector<EllipticCoeffs>& coeffs, const GridSpec& grid,
                            int eigen_limit = 4096);

  const GridSpec& grid() const { return grid_; }
  bool symmetric() const { return symmetric_; }
  bool has_eigen() const { return has_eigen_; }
  /// Unique per built instance; lets solvers cache factorizations safely.
  std::uint64_t id() const { return id_; }

  const Tridiag& matrix(int comp) const { return mats_[comp]; }
  /// alpha_k > 0, ascending (eigenvalues of -A).
  const Eigen::VectorXd& alphas(int comp) const;
  /// Columns are H-normalized discrete eigenvectors.
  const Eigen::MatrixXd& eigenvectors(int comp) const;

  /// H-inner products <x, e_k> for one component.
  Eigen::VectorXd mode_coeffs(int comp, const double* x) const;
  void from_modes(int comp, const Eigen::VectorXd& c, double* x) const;

 private:
  GridSpec grid_;
  std::uint64_t id_ = 0;
  std::vector<Tridiag> mats_;
  bool symmetric_ = false;
  bool has_eigen_ = false;
  std::vector<Eigen::VectorXd> alphas_;
  std::vector<Eigen::MatrixXd> evecs_;
};

Field apply_A(const OperatorDisc& op, const Field& x);
Field apply_A_transpose(const OperatorDisc& op, const Field& x);
/// Solves (I - dt*A) y = rhs by tridiagonal elimination.
Field implicit_solve(const OperatorDisc& op, double dt, const Field& rhs);
Field semigroup_apply(const OperatorDisc& op, double t, const Field& x);
double sobolev_norm(const Field& x, double delta, const OperatorDisc& op);

}  // namespace rdmeta
