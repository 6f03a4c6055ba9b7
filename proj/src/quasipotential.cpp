#include "rdmeta/quasipotential.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>

#include "rdmeta/kernels.hpp"

namespace rdmeta {

namespace {

Eigen::MatrixXd assemble_jacobian(const ModelSpec& model, const OperatorDisc& op,
                                  const Field& x) {
  const int M = op.grid().interior_points_M;
  const int r = model.r;
  const int n = r * M;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < r; ++i) {
    const Tridiag& T = op.matrix(i);
    const int off = i * M;
    for (int j = 0; j < M; ++j) {
      J(off + j, off + j) = T.diag[j];
      if (j > 0) J(off + j, off + j - 1) = T.lower[j - 1];
      if (j < M - 1) J(off + j, off + j + 1) = T.upper[j];
    }
  }
  std::vector<double> df;
  eval_F_jacobian(model, x, df);
  for (int j = 0; j < M; ++j)
    for (int i = 0; i < r; ++i)
      for (int i2 = 0; i2 < r; ++i2)
        J(i * M + j, i2 * M + j) += df[static_cast<std::size_t>(j) * r * r + i * r + i2];
  return J;
}

Field residual_field(const ModelSpec& model, const OperatorDisc& op, const Field& x) {
  Field res = apply_A(op, x);
  Field f = eval_F(model, x);
  res += f;
  return res;
}

}  // namespace

std::vector<Equilibrium> find_equilibria(const ModelSpec& model, const OperatorDisc& op,
                                         const std::vector<Field>& seeds,
                                         int max_leading_eigenvalues) {
  std::vector<Equilibrium> found;
  const int n = op.grid().size();
  for (const Field& seed : seeds) {
    if (!seed.finite()) continue;
    Field x = seed;
    double rn = h_norm(residual_field(model, op, x));
    bool ok = true;
    for (int iter = 0; iter < 60 && rn > 1e-13; ++iter) {
      Eigen::MatrixXd J = assemble_jacobian(model, op, x);
      Field res = residual_field(model, op, x);
      Eigen::Map<const Eigen::VectorXd> rv(res.data(), n);
      Eigen::VectorXd dx = J.partialPivLu().solve(-rv);
      double s = 1.0;
      bool accepted = false;
      while (s > 1e-6) {
        Field xs = x;
        for (int i = 0; i < n; ++i) xs.data()[i] += s * dx[i];
        double rs;
        try {
          rs = h_norm(residual_field(model, op, xs));
        } catch (NonFiniteOutput&) {
          rs = 1e300;
        }
        if (rs < (1.0 - 0.25 * s) * rn || rs < 1e-13) {
          x = xs;
          rn = rs;
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) break;  // stalled (often at the rounding floor); judge by rn
    }
    if (!ok || rn > 1e-10) continue;  // NoConvergence for this seed; skip

    bool dup = false;
    for (const Equilibrium& e : found)
      if (sup_norm(e.state - x) < 1e-6) {
        dup = true;
        break;
      }
    if (dup) continue;

    Equilibrium eq;
    eq.state = x;
    eq.residual = rn;
    Eigen::MatrixXd J = assemble_jacobian(model, op, x);
    Eigen::EigenSolver<Eigen::MatrixXd> es(J);
    std::vector<double> re(n);
    for (int i = 0; i < n; ++i) re[i] = es.eigenvalues()[i].real();
    std::sort(re.rbegin(), re.rend());
    const int keep = std::min(max_leading_eigenvalues, n);
    eq.leading_eigenvalues.assign(re.begin(), re.begin() + keep);
    eq.unstable_count = static_cast<int>(
        std::count_if(re.begin(), re.end(), [](double v) { return v > 1e-8; }));
    found.push_back(std::move(eq));
  }
  for (std::size_t i = 0; i < found.size(); ++i) {
    found[i].label = (found[i].unstable_count == 0 ? "stable_" : "saddle_") + std::to_string(i);
  }
  return found;
}

RegionConstraint make_halfspace_region(const Field& center, const Field& dir,
                                       const std::vector<Field>& ball_centers, double rho) {
  RegionConstraint rc;
  rc.violation = [center, dir, ball_centers, rho](const Field& x, Field* grad) -> double {
    const double s = h_inner(x - center, dir);
    double depth = std::max(0.0, -s);
    // within depth of D: gradient of depth is -dxi*dir (Euclidean in node values)
    int branch = -1;  // -1: halfspace, >=0: ball index
    int arg_node = -1, arg_comp = -1;
    double arg_sign = 0.0;
    for (std::size_t b = 0; b < ball_centers.size(); ++b) {
      const Field d = x - ball_centers[b];
      // sup-norm distance beyond the ball
      double m = 0.0;
      int mi = 0, mj = 0;
      for (int i = 0; i < d.components(); ++i)
        for (int j = 0; j < d.nodes(); ++j)
          if (std::fabs(d.at(i, j)) > m) {
            m = std::fabs(d.at(i, j));
            mi = i;
            mj = j;
          }
      const double bd = std::max(0.0, m - rho);
      if (bd < depth) {
        depth = bd;
        branch = static_cast<int>(b);
        arg_comp = mi;
        arg_node = mj;
        arg_sign = d.at(mi, mj) >= 0 ? 1.0 : -1.0;
      }
    }
    if (grad != nullptr) {
      *grad = Field(x.grid());
      if (depth > 0.0) {
        if (branch < 0) {
          const double dxi = x.grid().spacing();
          for (int i = 0; i < grad->size(); ++i) grad->data()[i] = -dxi * dir.data()[i];
        } else {
          grad->at(arg_comp, arg_node) = arg_sign;
        }
      }
    }
    return depth;
  };
  return rc;
}

double mam_objective(const MamProblem& problem, const ModelSpec& model, const OperatorDisc& op,
                     const TrajectoryPath& path, std::vector<double>* grad) {
  const std::size_t N = path.steps();
  const int dim = op.grid().size();
  const double dt = path.dt;
  const double dxi = op.grid().spacing();
  const bool idg = diffusion_is_identity(model);
  const int r = model.r;
  const int M = op.grid().interior_points_M;

  if (grad) grad->assign((N - 1) * static_cast<std::size_t>(dim), 0.0);
  double value = 0.0;
  std::vector<double> df;

  for (std::size_t m = 0; m < N; ++m) {
    const Field& a = path.states[m];
    const Field& b = path.states[m + 1];
    Field mid = a;
    mid += b;
    mid *= 0.5;
    Field d = b;
    d -= a;
    d *= 1.0 / dt;
    Field ab = apply_A(op, b);
    d -= ab;
    Field f = eval_F(model, mid);
    d -= f;
    Field u = idg ? d : apply_G_inverse(model, mid, d);
    value += 0.5 * dt * dxi * kernels::sumsq(u.data(), u.size());
    if (!grad) continue;

    Field w = idg ? u : apply_G_transpose_inverse(model, mid, u);
    eval_F_jacobian(model, mid, df);
    Field jtw(op.grid());
    for (int j = 0; j < M; ++j) {
      const double* blk = df.data() + static_cast<std::size_t>(j) * r * r;
      for (int i2 = 0; i2 < r; ++i2) {
        double s = 0.0;
        for (int i = 0; i < r; ++i) s += blk[i * r + i2] * w.at(i, j);
        jtw.at(i2, j) = s;
      }
    }
    Field q(op.grid());
    if (!idg) {
      std::vector<double> dg(static_cast<std::size_t>(r) * r * r), xi(r);
      for (int j = 0; j < M; ++j) {
        for (int i = 0; i < r; ++i) xi[i] = mid.at(i, j);
        model.diffusion_gradient(xi.data(), dg.data());
        for (int k = 0; k < r; ++k) {
          double s = 0.0;
          for (int i = 0; i < r; ++i)
            for (int j2 = 0; j2 < r; ++j2)
              s += w.at(i, j) * u.at(j2, j) * dg[(static_cast<std::size_t>(i) * r + j2) * r + k];
          q.at(k, j) = s;
        }
      }
    }
    const double coeff = dt * dxi;
    if (m >= 1) {
      double* g = grad->data() + (m - 1) * static_cast<std::size_t>(dim);
      // left endpoint: (-1/dt) w - 0.5 Jt w - 0.5 q
      for (int i = 0; i < dim; ++i)
        g[i] += coeff * (-w.data()[i] / dt - 0.5 * jtw.data()[i] - 0.5 * q.data()[i]);
    }
    if (m + 1 <= N - 1) {
      double* g = grad->data() + m * static_cast<std::size_t>(dim);
      Field atw = apply_A_transpose(op, w);
      for (int i = 0; i < dim; ++i)
        g[i] += coeff *
                (w.data()[i] / dt - atw.data()[i] - 0.5 * jtw.data()[i] - 0.5 * q.data()[i]);
    }
  }

  if (problem.region) {
    Field gv;
    for (std::size_t m = 1; m < N; ++m) {
      const double v = problem.region->violation(path.states[m], grad ? &gv : nullptr);
      value += problem.penalty_weight * v * v;
      if (grad && v > 0.0) {
        double* g = grad->data() + (m - 1) * static_cast<std::size_t>(dim);
        kernels::axpy(2.0 * problem.penalty_weight * v, gv.data(), g, dim);
      }
    }
  }
  return value;
}

TrajectoryPath default_mam_init(const Field& x, const Field& y, double T, int N_t,
                                const ModelSpec& model, const OperatorDisc& op) {
  TrajectoryPath path;
  path.dt = T / N_t;
  path.states.reserve(N_t + 1);
  for (int m = 0; m <= N_t; ++m) {
    const double th = static_cast<double>(m) / N_t;
    Field s = x;
    s *= (1.0 - th);
    Field ty = y;
    ty *= th;
    s += ty;
    path.states.push_back(std::move(s));
  }
  const double tau = std::min(0.1, T / N_t);
  for (int m = 1; m < N_t; ++m)
    path.states[m] = deterministic_step(path.states[m], nullptr, tau, model, op, 1e9);
  return path;
}

namespace {

struct PathShape {
  std::size_t N;
  int dim;
};

void unpack(const std::vector<double>& z, TrajectoryPath& path, const PathShape& sh) {
  for (std::size_t m = 1; m < sh.N; ++m)
    std::copy(z.begin() + (m - 1) * sh.dim, z.begin() + m * sh.dim,
              path.states[m].data());
}

}  // namespace

MamResult mam_minimize(const MamProblem& problem, const ModelSpec& model,
                       const OperatorDisc& op, const TrajectoryPath& init) {
  if (problem.N_t < 8) throw Error("N_t must be >= 8");
  if (init.states.size() != static_cast<std::size_t>(problem.N_t) + 1)
    throw ShapeMismatch("init path node count does not match problem");
  if (sup_norm(init.front() - problem.x) > 1e-12 || sup_norm(init.back() - problem.y) > 1e-12)
    throw ShapeMismatch("init path endpoints do not match problem endpoints");

  const PathShape sh{static_cast<std::size_t>(problem.N_t), op.grid().size()};
  const std::size_t n = (sh.N - 1) * static_cast<std::size_t>(sh.dim);

  TrajectoryPath path = init;
  path.dt = problem.T / problem.N_t;
  std::vector<double> z(n);
  for (std::size_t m = 1; m < sh.N; ++m)
    std::copy(path.states[m].data(), path.states[m].data() + sh.dim,
              z.begin() + (m - 1) * sh.dim);

  std::vector<double> g(n), gnew(n);
  double f = mam_objective(problem, model, op, path, &g);

  // L-BFGS with Armijo backtracking
  constexpr int kMem = 8;
  std::deque<std::vector<double>> S, Y;
  std::deque<double> RhoInv;
  std::vector<double> dir(n), ztrial(n), alpha_buf(kMem);

  MamResult res;
  int iter = 0;
  bool line_fail = false;
  int accepted_total = 0, stall = 0;
  for (; iter < problem.max_iters; ++iter) {
    const double gn = kernels::max_abs(g.data(), n);
    if (gn < problem.grad_tol) {
      res.converged = true;
      break;
    }
    // practical convergence: the objective has stopped moving at relative
    // machine scale even though the gradient tolerance is out of reach
    if (stall >= 25) {
      res.converged = true;
      break;
    }
    // two-loop recursion
    std::copy(g.begin(), g.end(), dir.begin());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      const double a = kernels::dot(S[i].data(), dir.data(), n) / RhoInv[i];
      alpha_buf[i] = a;
      kernels::axpy(-a, Y[i].data(), dir.data(), n);
    }
    if (!S.empty()) {
      const double yy = kernels::sumsq(Y.back().data(), n);
      if (yy > 0) kernels::scale(RhoInv.back() / yy, dir.data(), n);
    }
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double b = kernels::dot(Y[i].data(), dir.data(), n) / RhoInv[i];
      kernels::axpy(alpha_buf[i] - b, S[i].data(), dir.data(), n);
    }
    kernels::scale(-1.0, dir.data(), n);
    double slope = kernels::dot(dir.data(), g.data(), n);
    if (slope > -1e-16 * gn) {
      std::copy(g.begin(), g.end(), dir.begin());
      kernels::scale(-1.0, dir.data(), n);
      slope = -kernels::sumsq(g.data(), n);
      S.clear();
      Y.clear();
      RhoInv.clear();
    }
    double step = S.empty() ? 1.0 / std::max(1.0, kernels::max_abs(g.data(), n)) : 1.0;
    double fnew = f;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      kernels::axpby(1.0, z.data(), step, dir.data(), ztrial.data(), n);
      unpack(ztrial, path, sh);
      fnew = mam_objective(problem, model, op, path, &gnew);
      if (fnew <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      line_fail = true;
      unpack(z, path, sh);  // restore best iterate
      // no descent step exists at machine precision: the iterate is at the
      // optimizer's numerical floor
      if (accepted_total >= 10) res.converged = true;
      break;
    }
    ++accepted_total;
    stall = (f - fnew <= 1e-9 * std::max(1.0, std::fabs(f))) ? stall + 1 : 0;
    std::vector<double> s(n), yv(n);
    kernels::axpby(1.0, ztrial.data(), -1.0, z.data(), s.data(), n);
    kernels::axpby(1.0, gnew.data(), -1.0, g.data(), yv.data(), n);
    const double sy = kernels::dot(s.data(), yv.data(), n);
    if (sy > 1e-14) {
      S.push_back(std::move(s));
      Y.push_back(std::move(yv));
      RhoInv.push_back(sy);
      if (static_cast<int>(S.size()) > kMem) {
        S.pop_front();
        Y.pop_front();
        RhoInv.pop_front();
      }
    }
    z.swap(ztrial);
    g.swap(gnew);
    f = fnew;
  }
  (void)line_fail;

  unpack(z, path, sh);
  res.path = path;
  res.report = action(path, model, op);
  res.iterations = iter;
  res.grad_norm = kernels::max_abs(g.data(), n);
  if (problem.region) {
    double mv = 0.0;
    for (const Field& s : path.states)
      mv = std::max(mv, problem.region->violation(s, nullptr));
    res.violation = mv;
  }
  return res;
}

TrajectoryPath rescale_path_horizon(const TrajectoryPath& path, double new_T) {
  TrajectoryPath out = path;
  out.dt = new_T / static_cast<double>(path.steps());
  return out;
}

QuasipotentialResult quasipotential(const Field& x, const Field& y, const ModelSpec& model,
                                    const OperatorDisc& op, const THorizonSchedule& schedule,
                                    const std::optional<RegionConstraint>& region,
                                    double penalty_weight) {
  QuasipotentialResult out;
  out.value = 1e300;
  bool have_warm = false;
  TrajectoryPath warm;
  int failures = 0;
  for (double T : schedule.horizons) {
    MamProblem prob;
    prob.x = x;
    prob.y = y;
    prob.T = T;
    prob.N_t = schedule.N_t;
    prob.region = region;
    prob.penalty_weight = penalty_weight;
    TrajectoryPath init =
        have_warm ? rescale_path_horizon(warm, T) : default_mam_init(x, y, T, schedule.N_t, model, op);
    MamResult r;
    try {
      r = mam_minimize(prob, model, op, init);
    } catch (Error&) {
      ++failures;
      continue;
    }
    out.per_horizon.emplace_back(T, r.report.total_action);
    out.any_converged = out.any_converged || r.converged;
    if (r.report.total_action < out.value) {
      out.value = r.report.total_action;
      out.best_path = r.path;
      out.best_T = T;
      out.violation = r.violation;
    }
    warm = r.path;
    have_warm = true;
  }
  if (out.per_horizon.empty())
    throw AllDiverged("no horizon in the schedule produced a usable path");
  return out;
}

BoundaryReport boundary_quasipotential(const Equilibrium& x_star,
                                       const std::vector<Equilibrium>& saddles,
                                       const ModelSpec& model, const OperatorDisc& op,
                                       const THorizonSchedule& schedule) {
  BoundaryReport rep;
  rep.min_value = 1e300;
  bool any = false;
  for (const Equilibrium& s : saddles) {
    if (s.unstable_count == 0) continue;  // not a boundary equilibrium
    QuasipotentialResult q = quasipotential(x_star.state, s.state, model, op, schedule);
    rep.per_saddle[s.label] = q.value;
    if (q.value < rep.min_value) {
      rep.min_value = q.value;
      rep.argmin = s.label;
    }
    any = true;
  }
  if (!any) throw Error("saddle list contains no unstable equilibria");
  return rep;
}

}  // namespace rdmeta
