#pragma once

#include <cstdint>
#include <optional>

#include "rdmeta/quasipotential.hpp"

namespace rdmeta {

enum class Membership { Inside, Outside, Undecided };

/// Flow-based membership oracle for the domain of attraction of a stable
/// equilibrium, with an optional cheap linear surrogate used as a first
/// filter during exit detection. Every verdict is confirmed by the flow.
struct BasinOracle {
  Equilibrium attractor;
  double rho_in = 0.1;      // certified ball radius around the attractor
  double T_flow = 50.0;     // flow horizon before returning Undecided
  double flow_dt = 1e-3;
  double blowup_threshold = 1e6;
  std::vector<Field> other_attractors;  // certified states of other basins

  bool has_surrogate = false;
  Field surrogate_center;  // saddle state
  Field surrogate_dir;     // H-normalized unstable direction, oriented so s(x*) > 0
  double surrogate_band = 0.0;

  double surrogate_value(const Field& x) const;
};

/// Builds the oracle and certifies B(x*, rho_in) subset D by flowing sampled
/// boundary points of the ball back into the half-radius ball.
BasinOracle make_basin_oracle(const Equilibrium& attractor,
                              const std::vector<Equilibrium>& saddles,
                              const std::vector<Field>& other_attractors,
                              const ModelSpec& model, const OperatorDisc& op,
                              double rho_in = 0.1, double T_flow = 50.0,
                              double flow_dt = 1e-3, std::uint64_t cert_seed = 99);

Membership basin_membership(const Field& x, const BasinOracle& oracle, const ModelSpec& model,
                            const OperatorDisc& op);

struct ExitRecord {
  double epsilon = 0.0;
  std::uint32_t trajectory = 0;
  std::uint64_t seed = 0;
  double tau = 0.0;
  Field exit_shape;
  std::string nearest_saddle;
  double nearest_dist = 0.0;
  bool blowup = false;
  bool censored = false;
  bool escalated = false;  // confirmation stayed Undecided after escalation
  std::uint64_t steps = 0;
};

struct ExitMcParams {
  std::vector<double> eps_list;
  int n_samples = 100;
  std::uint64_t max_steps_per_traj = 400000000ull;
  double max_seconds_per_traj = 0.0;  // 0 = no wall-clock cap
  std::uint64_t checkpoint_stride = 200000;
  std::uint64_t surrogate_cooldown = 200;
  int workers = 1;
};

/// Exit-time Monte Carlo: n_samples independent trajectories per epsilon with
/// split noise streams; exit detection via the surrogate filter plus periodic
/// flow-based confirmation.
std::vector<ExitRecord> run_exit_mc(const Field& x0, const ExitMcParams& params,
                                    const BasinOracle& oracle,
                                    const std::vector<Equilibrium>& saddles,
                                    const ModelSpec& model, const OperatorDisc& op,
                                    const SimConfig& cfg, const NoiseStream& root_stream);

struct ScalingRow {
  double epsilon = 0.0;
  int n = 0;
  double mean_tau = 0.0;
  double median_tau = 0.0;
  double eps_log_mean_tau = 0.0;
  double eps_log_median_tau = 0.0;
  double censor_rate = 0.0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;     // ascending epsilon
  double level_estimate = 0.0;      // intercept of eps*log(mean tau) vs eps
  double level_ci_low = 0.0;
  double level_ci_high = 0.0;
  bool censoring_heavy = false;
};

ScalingReport exit_scaling_report(const std::vector<ExitRecord>& records);

struct ShapeRow {
  double epsilon = 0.0;
  std::map<std::string, double> mass;          // fraction nearest to each saddle
  std::map<std::string, double> frac_within;   // fraction within delta of each saddle
  double delta = 0.5;
};

struct ShapeReport {
  std::vector<ShapeRow> rows;  // ascending epsilon
};

ShapeReport exit_shape_histogram(const std::vector<ExitRecord>& records,
                                 const std::vector<Equilibrium>& saddles, double delta = 0.5);

}  // namespace rdmeta
