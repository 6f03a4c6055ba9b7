#pragma once

#include <functional>
#include <vector>

#include "rdmeta/model.hpp"
#include "rdmeta/noise.hpp"

namespace rdmeta {

struct SimConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  double epsilon = 0.0;            // noise intensity
  double blowup_threshold = 1e6;   // sup-norm cap
  int observer_stride = 1;
};

/// dt default: resolves the explicit reaction term and the spatial roughness
/// of white noise; for the deterministic flow the spatial constraint is moot.
double default_dt(const GridSpec& grid, double epsilon);

/// States on a uniform time grid t0 + k*dt.
struct TrajectoryPath {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Field> states;

  double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
  std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
  const Field& front() const { return states.front(); }
  const Field& back() const { return states.back(); }
};

/// H-valued control, piecewise constant per time step.
struct ControlPath {
  double dt = 0.0;
  std::vector<Field> values;

  double l2_norm_sq() const;  // \int |u|_H^2 dt
};

/// Observer contract: called with (t, state); return false to stop.
using Observer = std::function<bool(double, const Field&)>;

/// One linear-implicit Euler-Maruyama step:
/// (I - dt A) X_{n+1} = X_n + dt F(X_n) + sqrt(eps) G(X_n) dW.
Field step_spde(const Field& state, const ModelSpec& model, const OperatorDisc& op,
                const SimConfig& cfg, NoiseStream& stream);

/// One deterministic step with optional control drift G(x)u; sub-steps
/// adaptively when the state is large enough that the explicit reaction term
/// would be unstable at the requested dt.
Field deterministic_step(const Field& state, const Field* u, double dt,
                         const ModelSpec& model, const OperatorDisc& op,
                         double blowup_threshold);

TrajectoryPath integrate_spde(const Field& x0, const ModelSpec& model, const OperatorDisc& op,
                              const SimConfig& cfg, NoiseStream& stream,
                              const Observer& observer = {});

TrajectoryPath integrate_skeleton(const Field& x0, const ControlPath& u, const ModelSpec& model,
                                  const OperatorDisc& op, const SimConfig& cfg,
                                  const Observer& observer = {});

/// Stochastic convolution with the diffusion frozen along a given trajectory:
/// (I - dt A) Y_{n+1} = Y_n + sqrt(eps) G(frozen_n) dW_n, Y_0 = 0.
TrajectoryPath stochastic_convolution(const TrajectoryPath& frozen, const ModelSpec& model,
                                      const OperatorDisc& op, const SimConfig& cfg,
                                      NoiseStream& stream);

}  // namespace rdmeta
