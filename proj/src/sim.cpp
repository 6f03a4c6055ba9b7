#include "rdmeta/sim.hpp"

#include <cmath>

#include "rdmeta/kernels.hpp"

namespace rdmeta {

double default_dt(const GridSpec& grid, double epsilon) {
  const double dx = grid.spacing();
  return epsilon > 0 ? std::min(0.1 * dx * dx, 1e-3) : 1e-3;
}

double ControlPath::l2_norm_sq() const {
  double s = 0.0;
  for (const Field& u : values) {
    const double hn = h_norm(u);
    s += hn * hn;
  }
  return dt * s;
}

Field step_spde(const Field& state, const ModelSpec& model, const OperatorDisc& op,
                const SimConfig& cfg, NoiseStream& stream) {
  if (!state.finite()) throw NonFiniteOutput("state not finite");
  if (cfg.epsilon == 0.0)
    return deterministic_step(state, nullptr, cfg.dt, model, op, cfg.blowup_threshold);
  Field rhs = state;
  Field f = eval_F(model, state);
  kernels::axpy(cfg.dt, f.data(), rhs.data(), rhs.size());
  Field dw = sample_increment(stream, state.grid(), cfg.dt);
  Field gdw = apply_G(model, state, dw);
  kernels::axpy(std::sqrt(cfg.epsilon), gdw.data(), rhs.data(), rhs.size());
  Field next = implicit_solve(op, cfg.dt, rhs);
  if (sup_norm(next) > cfg.blowup_threshold) throw BlowUp(cfg.dt);
  return next;
}

Field deterministic_step(const Field& state, const Field* u, double dt,
                         const ModelSpec& model, const OperatorDisc& op,
                         double blowup_threshold) {
  Field x = state;
  double remaining = dt;
  while (remaining > 0.0) {
    const double R = sup_norm(x);
    const double lip = model.reaction_lipschitz(R + 1.0);
    double h = std::min(remaining, 0.5 / lip);
    if (h >= remaining - 1e-15 * dt) h = remaining;  // avoid dust steps
    Field rhs = x;
    Field f = eval_F(model, x);
    if (u != nullptr) {
      Field gu = apply_G(model, x, *u);
      kernels::axpy(1.0, gu.data(), f.data(), f.size());
    }
    kernels::axpy(h, f.data(), rhs.data(), rhs.size());
    x = implicit_solve(op, h, rhs);
    if (sup_norm(x) > blowup_threshold) throw BlowUp(dt - remaining + h);
    remaining -= h;
  }
  return x;
}

namespace {

std::size_t step_count(const SimConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.t_max / cfg.dt));
}

}  // namespace

TrajectoryPath integrate_skeleton(const Field& x0, const ControlPath& u, const ModelSpec& model,
                                  const OperatorDisc& op, const SimConfig& cfg,
                                  const Observer& observer) {
  const std::size_t n = step_count(cfg);
  if (!u.values.empty()) {
    if (std::fabs(u.dt - cfg.dt) > 1e-12 * cfg.dt)
      throw ShapeMismatch("control time grid does not match integrator dt");
    if (u.values.size() < n) throw ShapeMismatch("control not defined on [0, t_max]");
  }
  TrajectoryPath path;
  path.dt = cfg.dt;
  path.states.reserve(n + 1);
  path.states.push_back(x0);
  Field x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const Field* uk = u.values.empty() ? nullptr : &u.values[k];
    try {
      x = deterministic_step(x, uk, cfg.dt, model, op, cfg.blowup_threshold);
    } catch (BlowUp&) {
      throw BlowUp(path.time(k));
    }
    path.states.push_back(x);
    if (observer && (k + 1) % cfg.observer_stride == 0) {
      if (!observer(path.time(k + 1), x)) break;
    }
  }
  return path;
}

TrajectoryPath integrate_spde(const Field& x0, const ModelSpec& model, const OperatorDisc& op,
                              const SimConfig& cfg, NoiseStream& stream,
                              const Observer& observer) {
  if (cfg.epsilon == 0.0) return integrate_skeleton(x0, ControlPath{}, model, op, cfg, observer);
  const std::size_t n = step_count(cfg);
  TrajectoryPath path;
  path.dt = cfg.dt;
  path.states.reserve(n + 1);
  path.states.push_back(x0);
  Field x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    try {
      x = step_spde(x, model, op, cfg, stream);
    } catch (BlowUp&) {
      throw BlowUp(path.time(k));
    }
    path.states.push_back(x);
    if (observer && (k + 1) % cfg.observer_stride == 0) {
      if (!observer(path.time(k + 1), x)) break;
    }
  }
  return path;
}

TrajectoryPath stochastic_convolution(const TrajectoryPath& frozen, const ModelSpec& model,
                                      const OperatorDisc& op, const SimConfig& cfg,
                                      NoiseStream& stream) {
  TrajectoryPath y;
  y.dt = cfg.dt;
  y.t0 = frozen.t0;
  y.states.reserve(frozen.states.size());
  Field cur(op.grid());
  y.states.push_back(cur);
  for (std::size_t k = 0; k + 1 < frozen.states.size(); ++k) {
    Field rhs = cur;
    if (cfg.epsilon > 0.0) {
      Field dw = sample_increment(stream, op.grid(), cfg.dt);
      Field gdw = apply_G(model, frozen.states[k], dw);
      kernels::axpy(std::sqrt(cfg.epsilon), gdw.data(), rhs.data(), rhs.size());
    }
    cur = implicit_solve(op, cfg.dt, rhs);
    y.states.push_back(cur);
  }
  return y;
}

}  // namespace rdmeta
