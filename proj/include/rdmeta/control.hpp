#pragma once

#include "rdmeta/sim.hpp"

namespace rdmeta {

struct ActionReport {
  double total_action = 0.0;
  std::vector<double> per_step;
  ControlPath recovered_control;
};

/// Algebraic recovery of the unique control u with phi = X^{0,u}: midpoint in
/// the nonlinearity, implicit placement of A to mirror the integrator.
ControlPath recover_control(const TrajectoryPath& path, const ModelSpec& model,
                            const OperatorDisc& op);

ActionReport action(const TrajectoryPath& path, const ModelSpec& model, const OperatorDisc& op);
/// Action of an explicit control: (1/2) int |u|_H^2 dt.
double control_energy(const ControlPath& u);

struct MergeResult {
  ControlPath v;
  TrajectoryPath merged;        // X^{0,v}_y
  TrajectoryPath reference;     // X^{0,u}_x
  double merge_time = -1.0;
  double energy_excess = 0.0;   // (1/2)|v|^2 - (1/2)|u|^2
  std::vector<double> distances;  // sup-distance per step
};

/// Feedback control that steers X^{0,v}_y onto X^{0,u}_x within time ~ |x-y|_E;
/// after the states coincide (sup-distance <= merge tolerance) v switches to
/// the exact matching control.
MergeResult feedback_connector(const Field& x, const Field& y, const ControlPath& u,
                               const ModelSpec& model, const OperatorDisc& op,
                               const SimConfig& cfg);

struct ReversedPathResult {
  TrajectoryPath path;  // the reversed trajectory, from X^0_x(T) back to x
  ControlPath u;        // u = -2 G^{-1}(Y)(AY + F(Y))
  ActionReport report;
  double h1_term = 0.0;      // |x|_{H1}^2 - |S(T)x|_{H1}^2
  double growth_term = 0.0;  // T (1 + sup_t |X^0_x(t)|_E^{1+rho})^2
};

/// Runs the flow from x for time T, reverses it, and assembles the explicit
/// control that drives the reversed trajectory.
ReversedPathResult reversed_path(const Field& x, double T, const ModelSpec& model,
                                 const OperatorDisc& op, const SimConfig& cfg);

}  // namespace rdmeta
