#include "rdmeta/control.hpp"

#include <cmath>

#include "rdmeta/kernels.hpp"

namespace rdmeta {

namespace {
constexpr double kMergeTol = 1e-8;
}

ControlPath recover_control(const TrajectoryPath& path, const ModelSpec& model,
                            const OperatorDisc& op) {
  if (path.states.size() < 2) throw Error("path needs at least two states");
  ControlPath u;
  u.dt = path.dt;
  u.values.reserve(path.steps());
  const double dt = path.dt;
  for (std::size_t m = 0; m + 1 < path.states.size(); ++m) {
    const Field& a = path.states[m];
    const Field& b = path.states[m + 1];
    Field mid = a;
    mid += b;
    mid *= 0.5;
    // (b - a)/dt - A b - F(mid)
    Field rhs = b;
    rhs -= a;
    rhs *= 1.0 / dt;
    Field ab = apply_A(op, b);
    rhs -= ab;
    Field f = eval_F(model, mid);
    rhs -= f;
    u.values.push_back(apply_G_inverse(model, mid, rhs));
  }
  return u;
}

double control_energy(const ControlPath& u) { return 0.5 * u.l2_norm_sq(); }

ActionReport action(const TrajectoryPath& path, const ModelSpec& model,
                    const OperatorDisc& op) {
  ActionReport rep;
  rep.recovered_control = recover_control(path, model, op);
  rep.per_step.reserve(rep.recovered_control.values.size());
  for (const Field& um : rep.recovered_control.values) {
    const double hn = h_norm(um);
    rep.per_step.push_back(0.5 * path.dt * hn * hn);
    rep.total_action += rep.per_step.back();
  }
  return rep;
}

MergeResult feedback_connector(const Field& x, const Field& y, const ControlPath& u,
                               const ModelSpec& model, const OperatorDisc& op,
                               const SimConfig& cfg) {
  const double dt = cfg.dt;
  const std::size_t n = static_cast<std::size_t>(std::llround(cfg.t_max / dt));
  if (!u.values.empty() && u.values.size() < n)
    throw ShapeMismatch("control not defined on [0, t_max]");
  const double delta0 = sup_norm(x - y);

  MergeResult res;
  res.reference.dt = dt;
  res.merged.dt = dt;
  res.v.dt = dt;
  res.reference.states.push_back(x);
  res.merged.states.push_back(y);
  res.distances.push_back(delta0);
  if (delta0 <= kMergeTol) res.merge_time = 0.0;

  Field zero(op.grid());
  Field xu = x, xv = y;
  for (std::size_t k = 0; k < n; ++k) {
    const Field& uk = u.values.empty() ? zero : u.values[k];
    // reference step
    Field rhs = xu;
    Field fu = eval_F(model, xu);
    kernels::axpy(dt, fu.data(), rhs.data(), rhs.size());
    Field gu = apply_G(model, xu, uk);
    kernels::axpy(dt, gu.data(), rhs.data(), rhs.size());
    Field xu_next = implicit_solve(op, dt, rhs);

    Field diff = xv - xu;
    const double dist = sup_norm(diff);
    Field vk(op.grid());
    Field fv = eval_F(model, xv);
    if (dist <= kMergeTol) {
      // exact tracking: v chosen so the discrete states coincide
      Field drift = gu;  // G(xu) u
      drift += fu;
      drift -= fv;
      Field corr = diff;
      corr *= -1.0 / dt;
      drift += corr;
      vk = apply_G_inverse(model, xv, drift);
      xv = xu_next;
    } else {
      Field drift = gu;
      drift += fu;
      drift -= fv;
      Field pull = diff;
      pull *= -std::min(1.0 / dist, 1.0 / dt);
      drift += pull;
      vk = apply_G_inverse(model, xv, drift);
      // merged step with control v
      Field rv = xv;
      kernels::axpy(dt, fv.data(), rv.data(), rv.size());
      Field gv = apply_G(model, xv, vk);
      kernels::axpy(dt, gv.data(), rv.data(), rv.size());
      xv = implicit_solve(op, dt, rv);
    }
    xu = xu_next;
    res.reference.states.push_back(xu);
    res.merged.states.push_back(xv);
    res.v.values.push_back(vk);
    const double d_next = sup_norm(xv - xu);
    res.distances.push_back(d_next);
    if (res.merge_time < 0 && d_next <= kMergeTol)
      res.merge_time = dt * static_cast<double>(k + 1);
    if (res.merge_time < 0 && dt * static_cast<double>(k + 1) > 2.0 * delta0 + 4.0 * dt)
      throw NoMerge("sup-distance did not reach merge tolerance by t = 2*delta");
  }
  if (res.merge_time < 0)
    throw NoMerge("sup-distance did not reach merge tolerance within the horizon");

  ControlPath utrunc;
  utrunc.dt = dt;
  for (std::size_t k = 0; k < n; ++k) utrunc.values.push_back(u.values.empty() ? zero : u.values[k]);
  res.energy_excess = control_energy(res.v) - control_energy(utrunc);
  return res;
}

ReversedPathResult reversed_path(const Field& x, double T, const ModelSpec& model,
                                 const OperatorDisc& op, const SimConfig& cfg) {
  SimConfig flow_cfg = cfg;
  flow_cfg.t_max = T;
  flow_cfg.epsilon = 0.0;
  TrajectoryPath fwd = integrate_skeleton(x, ControlPath{}, model, op, flow_cfg);

  ReversedPathResult res;
  res.path.dt = cfg.dt;
  res.path.states.assign(fwd.states.rbegin(), fwd.states.rend());

  res.u.dt = cfg.dt;
  for (std::size_t m = 0; m + 1 < res.path.states.size(); ++m) {
    Field mid = res.path.states[m];
    mid += res.path.states[m + 1];
    mid *= 0.5;
    Field drift = apply_A(op, mid);
    Field f = eval_F(model, mid);
    drift += f;
    drift *= -2.0;
    res.u.values.push_back(apply_G_inverse(model, mid, drift));
  }

  res.report.recovered_control = res.u;
  for (const Field& um : res.u.values) {
    const double hn = h_norm(um);
    res.report.per_step.push_back(0.5 * cfg.dt * hn * hn);
    res.report.total_action += res.report.per_step.back();
  }

  const double h1_start = sobolev_norm(x, 1.0, op);
  const double h1_end = sobolev_norm(semigroup_apply(op, T, x), 1.0, op);
  res.h1_term = h1_start * h1_start - h1_end * h1_end;
  double sup_traj = 0.0;
  for (const Field& s : fwd.states) sup_traj = std::max(sup_traj, sup_norm(s));
  const double g = 1.0 + std::pow(sup_traj, 1.0 + model.rho);
  res.growth_term = T * g * g;
  return res;
}

}  // namespace rdmeta
