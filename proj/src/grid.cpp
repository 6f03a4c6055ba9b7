#include "rdmeta/grid.hpp"

#include <atomic>
#include <cmath>

#include "rdmeta/kernels.hpp"

namespace rdmeta {

GridSpec make_grid(double L, int M, int r) {
  if (L <= 0) throw Error("grid length must be positive");
  if (M < 3) throw Error("grid needs at least 3 interior points");
  if (r < 1) throw Error("component count must be >= 1");
  return GridSpec{L, M, r};
}

bool Field::finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

Field& Field::operator+=(const Field& o) {
  if (!(grid_ == o.grid_)) throw ShapeMismatch("field grids differ");
  kernels::axpy(1.0, o.data(), data(), v_.size());
  return *this;
}

Field& Field::operator-=(const Field& o) {
  if (!(grid_ == o.grid_)) throw ShapeMismatch("field grids differ");
  kernels::axpy(-1.0, o.data(), data(), v_.size());
  return *this;
}

Field& Field::operator*=(double c) {
  kernels::scale(c, data(), v_.size());
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double c, Field a) { return a *= c; }

Field sample_field(const GridSpec& g, const std::function<double(int, double)>& fn) {
  Field f(g);
  for (int i = 0; i < g.components_r; ++i)
    for (int j = 0; j < g.interior_points_M; ++j) f.at(i, j) = fn(i, g.node(j));
  return f;
}

Field sample_field(const GridSpec& g, const std::function<double(double)>& fn) {
  return sample_field(g, [&](int, double xi) { return fn(xi); });
}

double sup_norm(const Field& x) {
  const int r = x.components();
  if (r == 1) return kernels::max_abs(x.data(), x.size());
  double m = 0.0;
  for (int j = 0; j < x.nodes(); ++j) {
    double s = 0.0;
    for (int i = 0; i < r; ++i) s += x.at(i, j) * x.at(i, j);
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

double h_norm(const Field& x) {
  return std::sqrt(x.grid().spacing() * kernels::sumsq(x.data(), x.size()));
}

double h_inner(const Field& x, const Field& y) {
  if (!(x.grid() == y.grid())) throw ShapeMismatch("field grids differ");
  return x.grid().spacing() * kernels::dot(x.data(), y.data(), x.size());
}

OperatorDisc OperatorDisc::build(const std::vector<EllipticCoeffs>& coeffs,
                                 const GridSpec& grid, int eigen_limit) {
  if (static_cast<int>(coeffs.size()) != grid.components_r)
    throw ShapeMismatch("one coefficient pair per component required");
  OperatorDisc op;
  op.grid_ = grid;
  static std::atomic<std::uint64_t> next_id{1};
  op.id_ = next_id.fetch_add(1);
  const int M = grid.interior_points_M;
  const double dx = grid.spacing();
  const double dx2 = dx * dx;

  op.symmetric_ = true;
  for (const auto& c : coeffs) {
    bool has_b = static_cast<bool>(c.b);
    if (has_b) {
      // treat an identically-zero callable as absent
      bool all_zero = true;
      for (int j = 0; j <= M + 1; ++j)
        if (c.b(dx * j) != 0.0) {
          all_zero = false;
          break;
        }
      has_b = !all_zero;
    }
    if (has_b) op.symmetric_ = false;
  }

  for (int i = 0; i < grid.components_r; ++i) {
    const auto& c = coeffs[i];
    for (int j = 0; j < M; ++j) {
      const double aj = c.a(grid.node(j));
      if (aj <= 0.0)
        throw NonElliptic("a(xi) <= 0 at node " + std::to_string(j) + " of component " +
                          std::to_string(i));
    }
    Tridiag T;
    T.diag.resize(M);
    T.lower.resize(M - 1);
    T.upper.resize(M - 1);
    if (op.symmetric_) {
      // divergence form (a u')' with midpoint coefficients; symmetric
      for (int j = 0; j < M; ++j) {
        const double am = c.a(grid.node(j) - 0.5 * dx);
        const double ap = c.a(grid.node(j) + 0.5 * dx);
        T.diag[j] = -(am + ap) / dx2;
        if (j > 0) T.lower[j - 1] = am / dx2;
        if (j < M - 1) T.upper[j] = ap / dx2;
      }
    } else {
      for (int j = 0; j < M; ++j) {
        const double aj = c.a(grid.node(j));
        const double bj = c.b ? c.b(grid.node(j)) : 0.0;
        T.diag[j] = -2.0 * aj / dx2;
        if (j > 0) T.lower[j - 1] = aj / dx2 - bj / (2.0 * dx);
        if (j < M - 1) T.upper[j] = aj / dx2 + bj / (2.0 * dx);
      }
    }
    op.mats_.push_back(std::move(T));
  }

  if (op.symmetric_ && M <= eigen_limit) {
    for (int i = 0; i < grid.components_r; ++i) {
      const Tridiag& T = op.mats_[i];
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
      for (int j = 0; j < M; ++j) {
        A(j, j) = -T.diag[j];  // spectrum of -A
        if (j > 0) A(j, j - 1) = -T.lower[j - 1];
        if (j < M - 1) A(j, j + 1) = -T.upper[j];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
      Eigen::VectorXd alpha = es.eigenvalues();
      Eigen::MatrixXd V = es.eigenvectors();
      // H-normalize: <e_k, e_k>_H = dx * |e_k|^2 = 1
      V *= 1.0 / std::sqrt(dx);
      op.alphas_.push_back(std::move(alpha));
      op.evecs_.push_back(std::move(V));
    }
    op.has_eigen_ = true;
  }
  return op;
}

const Eigen::VectorXd& OperatorDisc::alphas(int comp) const {
  if (!has_eigen_) throw EigenUnavailable("eigendecomposition not available");
  return alphas_[comp];
}

const Eigen::MatrixXd& OperatorDisc::eigenvectors(int comp) const {
  if (!has_eigen_) throw EigenUnavailable("eigendecomposition not available");
  return evecs_[comp];
}

Eigen::VectorXd OperatorDisc::mode_coeffs(int comp, const double* x) const {
  const int M = grid_.interior_points_M;
  Eigen::Map<const Eigen::VectorXd> xv(x, M);
  return grid_.spacing() * (eigenvectors(comp).transpose() * xv);
}

void OperatorDisc::from_modes(int comp, const Eigen::VectorXd& c, double* x) const {
  const int M = grid_.interior_points_M;
  Eigen::Map<Eigen::VectorXd> xv(x, M);
  xv = eigenvectors(comp) * c;
}

namespace {

void tridiag_matvec(const Tridiag& T, const double* x, double* y, int M, bool transpose) {
  const auto& lo = transpose ? T.upper : T.lower;
  const auto& up = transpose ? T.lower : T.upper;
  for (int j = 0; j < M; ++j) {
    double s = T.diag[j] * x[j];
    if (j > 0) s += lo[j - 1] * x[j - 1];
    if (j < M - 1) s += up[j] * x[j + 1];
    y[j] = s;
  }
}

}  // namespace

Field apply_A(const OperatorDisc& op, const Field& x) {
  if (!(x.grid() == op.grid())) throw ShapeMismatch("field grid does not match operator");
  Field y(op.grid());
  const int M = op.grid().interior_points_M;
  for (int i = 0; i < op.grid().components_r; ++i)
    tridiag_matvec(op.matrix(i), x.comp(i), y.comp(i), M, false);
  return y;
}

Field apply_A_transpose(const OperatorDisc& op, const Field& x) {
  if (!(x.grid() == op.grid())) throw ShapeMismatch("field grid does not match operator");
  Field y(op.grid());
  const int M = op.grid().interior_points_M;
  for (int i = 0; i < op.grid().components_r; ++i)
    tridiag_matvec(op.matrix(i), x.comp(i), y.comp(i), M, true);
  return y;
}

namespace {

// Precomputed Thomas elimination of (I - dt*A); integrators call
// implicit_solve with a fixed (op, dt) millions of times, so the sweep
// coefficients are cached per thread.
struct ImplicitFactor {
  std::uint64_t op_id = 0;
  double dt = -1.0;
  // per component: c (normalized upper), inv_piv, l (lower of I - dt*A)
  std::vector<std::vector<double>> c, inv_piv, l;
};

void factorize(const OperatorDisc& op, double dt, ImplicitFactor& fac) {
  const int M = op.grid().interior_points_M;
  const int r = op.grid().components_r;
  fac.c.assign(r, std::vector<double>(M));
  fac.inv_piv.assign(r, std::vector<double>(M));
  fac.l.assign(r, std::vector<double>(M));
  for (int i = 0; i < r; ++i) {
    const Tridiag& T = op.matrix(i);
    double piv = 1.0 - dt * T.diag[0];
    if (std::fabs(piv) < 1e-14) throw SingularSystem("zero pivot in tridiagonal solve");
    fac.inv_piv[i][0] = 1.0 / piv;
    fac.c[i][0] = (M > 1) ? (-dt * T.upper[0]) / piv : 0.0;
    for (int j = 1; j < M; ++j) {
      const double lj = -dt * T.lower[j - 1];
      fac.l[i][j] = lj;
      piv = (1.0 - dt * T.diag[j]) - lj * fac.c[i][j - 1];
      if (std::fabs(piv) < 1e-14) throw SingularSystem("zero pivot in tridiagonal solve");
      fac.inv_piv[i][j] = 1.0 / piv;
      if (j < M - 1) fac.c[i][j] = (-dt * T.upper[j]) * fac.inv_piv[i][j];
    }
  }
  fac.op_id = op.id();
  fac.dt = dt;
}

}  // namespace

Field implicit_solve(const OperatorDisc& op, double dt, const Field& rhs) {
  if (!(rhs.grid() == op.grid())) throw ShapeMismatch("field grid does not match operator");
  if (dt <= 0) throw Error("dt must be positive");
  const int M = op.grid().interior_points_M;
  thread_local ImplicitFactor fac;
  if (fac.op_id != op.id() || fac.dt != dt) factorize(op, dt, fac);
  Field y(op.grid());
  for (int i = 0; i < op.grid().components_r; ++i) {
    const double* b = rhs.comp(i);
    const double* c = fac.c[i].data();
    const double* ip = fac.inv_piv[i].data();
    const double* l = fac.l[i].data();
    double* x = y.comp(i);
    x[0] = b[0] * ip[0];
    for (int j = 1; j < M; ++j) x[j] = (b[j] - l[j] * x[j - 1]) * ip[j];
    for (int j = M - 2; j >= 0; --j) x[j] -= c[j] * x[j + 1];
  }
  return y;
}

Field semigroup_apply(const OperatorDisc& op, double t, const Field& x) {
  if (!(x.grid() == op.grid())) throw ShapeMismatch("field grid does not match operator");
  if (t < 0) throw Error("semigroup time must be nonnegative");
  if (t == 0.0) return x;
  Field y(op.grid());
  for (int i = 0; i < op.grid().components_r; ++i) {
    Eigen::VectorXd c = op.mode_coeffs(i, x.comp(i));
    const Eigen::VectorXd& alpha = op.alphas(i);
    for (int k = 0; k < c.size(); ++k) c[k] *= std::exp(-alpha[k] * t);
    op.from_modes(i, c, y.comp(i));
  }
  return y;
}

double sobolev_norm(const Field& x, double delta, const OperatorDisc& op) {
  if (!(x.grid() == op.grid())) throw ShapeMismatch("field grid does not match operator");
  double s = 0.0;
  for (int i = 0; i < op.grid().components_r; ++i) {
    Eigen::VectorXd c = op.mode_coeffs(i, x.comp(i));
    const Eigen::VectorXd& alpha = op.alphas(i);
    for (int k = 0; k < c.size(); ++k) s += std::pow(alpha[k], delta) * c[k] * c[k];
  }
  return std::sqrt(s);
}

}  // namespace rdmeta
