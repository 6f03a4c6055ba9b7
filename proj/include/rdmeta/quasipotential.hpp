#pragma once

#include <map>
#include <optional>
#include <string>

#include "rdmeta/control.hpp"

namespace rdmeta {

struct Equilibrium {
  Field state;
  double residual = 0.0;  // |Ax + F(x)|_H
  int unstable_count = 0;
  std::vector<double> leading_eigenvalues;  // of A + DF(x), descending real part
  std::string label;
};

/// Damped Newton on Ax + F(x) = 0 from each seed; deduplicates and classifies
/// by the spectrum of the linearization. Seeds that fail to converge are
/// dropped (reported via the returned count being smaller).
std::vector<Equilibrium> find_equilibria(const ModelSpec& model, const OperatorDisc& op,
                                         const std::vector<Field>& seeds,
                                         int max_leading_eigenvalues = 6);

/// Allowed-region descriptor for the constrained quasipotentials. violation()
/// returns the depth by which a state leaves the allowed region (0 when
/// inside) and, when grad != nullptr, a (sub)gradient of that depth.
struct RegionConstraint {
  std::function<double(const Field&, Field* grad)> violation;
};

/// Depth-of-violation function for D ~ {s > 0} with a linear separatrix
/// surrogate s(x) = <x - center, dir>_H, softened by balls of radius rho
/// around the given centers.
RegionConstraint make_halfspace_region(const Field& center, const Field& dir_h_normalized,
                                       const std::vector<Field>& ball_centers, double rho);

struct MamProblem {
  Field x, y;         // endpoints
  double T = 10.0;    // horizon
  int N_t = 100;      // time steps (path has N_t + 1 nodes)
  std::optional<RegionConstraint> region;
  double penalty_weight = 100.0;
  double grad_tol = 1e-6;
  int max_iters = 5000;
};

struct MamResult {
  TrajectoryPath path;
  ActionReport report;
  bool converged = false;
  double grad_norm = 0.0;
  int iterations = 0;
  double violation = 0.0;  // max violation depth along the path
};

/// Linear interpolation between endpoints followed by one smoothing pass
/// through the flow map.
TrajectoryPath default_mam_init(const Field& x, const Field& y, double T, int N_t,
                                const ModelSpec& model, const OperatorDisc& op);

/// Minimizes the discrete action over interior path nodes (L-BFGS with the
/// analytic gradient of the algebraically recovered control).
MamResult mam_minimize(const MamProblem& problem, const ModelSpec& model,
                       const OperatorDisc& op, const TrajectoryPath& init);

/// Value of the discrete action objective (including penalty) for a path;
/// exposed for gradient checks.
double mam_objective(const MamProblem& problem, const ModelSpec& model, const OperatorDisc& op,
                     const TrajectoryPath& path, std::vector<double>* grad = nullptr);

struct THorizonSchedule {
  std::vector<double> horizons{5, 10, 20, 40};
  int N_t = 200;
};

struct QuasipotentialResult {
  double value = 0.0;
  TrajectoryPath best_path;
  double best_T = 0.0;
  bool any_converged = false;
  std::vector<std::pair<double, double>> per_horizon;  // (T, value)
  double violation = 0.0;
};

/// Outer minimization over the T schedule with warm-started paths.
QuasipotentialResult quasipotential(const Field& x, const Field& y, const ModelSpec& model,
                                    const OperatorDisc& op, const THorizonSchedule& schedule,
                                    const std::optional<RegionConstraint>& region = {},
                                    double penalty_weight = 100.0);

struct BoundaryReport {
  std::map<std::string, double> per_saddle;  // V(x*, K_i)
  double min_value = 0.0;                    // declared V(x*, dD)
  std::string argmin;
};

/// V(x*, K_i) for each boundary (unstable) equilibrium; stable entries in the
/// saddle list are filtered out.
BoundaryReport boundary_quasipotential(const Equilibrium& x_star,
                                       const std::vector<Equilibrium>& saddles,
                                       const ModelSpec& model, const OperatorDisc& op,
                                       const THorizonSchedule& schedule);

/// Time-reinterpolation of a path onto a new horizon with the same node count.
TrajectoryPath rescale_path_horizon(const TrajectoryPath& path, double new_T);

}  // namespace rdmeta
