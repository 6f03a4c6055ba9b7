#include "rdmeta/exit.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "rdmeta/kernels.hpp"

namespace rdmeta {

double BasinOracle::surrogate_value(const Field& x) const {
  return h_inner(x - surrogate_center, surrogate_dir);
}

Membership basin_membership(const Field& x, const BasinOracle& oracle, const ModelSpec& model,
                            const OperatorDisc& op) {
  if (!x.finite()) return Membership::Outside;
  Field cur = x;
  double t = 0.0;
  while (t < oracle.T_flow) {
    if (sup_norm(cur - oracle.attractor.state) < oracle.rho_in) return Membership::Inside;
    for (const Field& other : oracle.other_attractors)
      if (sup_norm(cur - other) < oracle.rho_in) return Membership::Outside;
    try {
      cur = deterministic_step(cur, nullptr, oracle.flow_dt, model, op,
                               oracle.blowup_threshold);
    } catch (BlowUp&) {
      return Membership::Outside;
    }
    t += oracle.flow_dt;
  }
  return Membership::Undecided;
}

BasinOracle make_basin_oracle(const Equilibrium& attractor,
                              const std::vector<Equilibrium>& saddles,
                              const std::vector<Field>& other_attractors,
                              const ModelSpec& model, const OperatorDisc& op, double rho_in,
                              double T_flow, double flow_dt, std::uint64_t cert_seed) {
  BasinOracle oracle;
  oracle.attractor = attractor;
  oracle.rho_in = rho_in;
  oracle.T_flow = T_flow;
  oracle.flow_dt = flow_dt;
  oracle.other_attractors = other_attractors;

  // certify B(x*, rho_in) subset D: flow sampled boundary points of the ball
  // into the half-radius ball
  auto certify = [&](Field dir) {
    dir *= rho_in / std::max(sup_norm(dir), 1e-30);
    Field p = attractor.state + dir;
    bool back = false;
    double t = 0.0;
    while (t < T_flow) {
      if (sup_norm(p - attractor.state) < 0.5 * rho_in) {
        back = true;
        break;
      }
      p = deterministic_step(p, nullptr, flow_dt, model, op, 1e9);
      t += flow_dt;
    }
    if (!back)
      throw Error("basin oracle certification failed: ball point did not return; shrink rho_in");
  };

  std::mt19937_64 rng(cert_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n_cert = 8;
  for (int c = 0; c < n_cert; ++c) {
    Field dir(op.grid());
    for (int i = 0; i < dir.size(); ++i) dir.data()[i] = gauss(rng);
    certify(dir);
  }
  // coherent probes: rough random directions smooth away instantly, so also
  // aim straight at every known competing structure
  for (const Equilibrium& s : saddles)
    if (s.unstable_count > 0 && sup_norm(s.state - attractor.state) > 1e-12)
      certify(s.state - attractor.state);
  for (const Field& o : other_attractors)
    if (sup_norm(o - attractor.state) > 1e-12) certify(o - attractor.state);

  // surrogate: projection onto the nearest saddle's unstable eigenvector
  const Equilibrium* best = nullptr;
  double best_d = 1e300;
  for (const Equilibrium& s : saddles) {
    if (s.unstable_count == 0) continue;
    const double d = sup_norm(s.state - attractor.state);
    if (d < best_d) {
      best_d = d;
      best = &s;
    }
  }
  if (best != nullptr && op.has_eigen()) {
    Eigen::MatrixXd J(op.grid().size(), op.grid().size());
    // unstable direction from the linearization at the saddle via power-like
    // dense eigensolver on A + DF
    const int M = op.grid().interior_points_M;
    const int r = model.r;
    J.setZero();
    for (int i = 0; i < r; ++i) {
      const Tridiag& T = op.matrix(i);
      for (int j = 0; j < M; ++j) {
        J(i * M + j, i * M + j) = T.diag[j];
        if (j > 0) J(i * M + j, i * M + j - 1) = T.lower[j - 1];
        if (j < M - 1) J(i * M + j, i * M + j + 1) = T.upper[j];
      }
    }
    std::vector<double> df;
    eval_F_jacobian(model, best->state, df);
    for (int j = 0; j < M; ++j)
      for (int i = 0; i < r; ++i)
        for (int i2 = 0; i2 < r; ++i2)
          J(i * M + j, i2 * M + j) += df[static_cast<std::size_t>(j) * r * r + i * r + i2];
    Eigen::EigenSolver<Eigen::MatrixXd> es(J);
    int arg = 0;
    double mx = -1e300;
    for (int i = 0; i < J.rows(); ++i)
      if (es.eigenvalues()[i].real() > mx) {
        mx = es.eigenvalues()[i].real();
        arg = i;
      }
    Field dir(op.grid());
    for (int i = 0; i < dir.size(); ++i) dir.data()[i] = es.eigenvectors().col(arg)[i].real();
    dir *= 1.0 / std::max(h_norm(dir), 1e-30);
    oracle.surrogate_center = best->state;
    const double s_star = h_inner(attractor.state - best->state, dir);
    if (s_star < 0) dir *= -1.0;
    oracle.surrogate_dir = dir;
    oracle.surrogate_band = 0.0;  // trigger on sign crossing
    oracle.has_surrogate = true;
  }
  return oracle;
}

namespace {

void finish_record(ExitRecord& rec, const Field& shape,
                   const std::vector<Equilibrium>& saddles) {
  rec.exit_shape = shape;
  double best = 1e300;
  for (const Equilibrium& s : saddles) {
    if (s.unstable_count == 0) continue;
    const double d = sup_norm(shape - s.state);
    if (d < best) {
      best = d;
      rec.nearest_saddle = s.label;
      rec.nearest_dist = d;
    }
  }
}

ExitRecord run_one_trajectory(const Field& x0, double eps, std::uint32_t traj_index,
                              const ExitMcParams& params, const BasinOracle& oracle,
                              const std::vector<Equilibrium>& saddles, const ModelSpec& model,
                              const OperatorDisc& op, const SimConfig& base_cfg,
                              const NoiseStream& root_stream) {
  SimConfig cfg = base_cfg;
  cfg.epsilon = eps;
  NoiseStream stream = split_stream(root_stream, traj_index);

  ExitRecord rec;
  rec.epsilon = eps;
  rec.trajectory = traj_index;
  rec.seed = root_stream.root_seed;

  const auto t_start = std::chrono::steady_clock::now();
  Field x = x0;
  std::uint64_t k = 0;
  std::uint64_t cooldown_until = 0;

  while (true) {
    if (k >= params.max_steps_per_traj) {
      rec.censored = true;
      rec.tau = cfg.dt * static_cast<double>(k);
      rec.steps = k;
      finish_record(rec, x, saddles);
      return rec;
    }
    if (params.max_seconds_per_traj > 0 && (k & 0xFFFFF) == 0) {
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      if (el > params.max_seconds_per_traj) {
        rec.censored = true;
        rec.tau = cfg.dt * static_cast<double>(k);
        rec.steps = k;
        finish_record(rec, x, saddles);
        return rec;
      }
    }
    try {
      x = step_spde(x, model, op, cfg, stream);
    } catch (BlowUp&) {
      rec.blowup = true;
      rec.tau = cfg.dt * static_cast<double>(k + 1);
      rec.steps = k + 1;
      finish_record(rec, x, saddles);
      return rec;
    }
    ++k;

    bool check = (k % params.checkpoint_stride == 0);
    if (!check && oracle.has_surrogate && k >= cooldown_until)
      check = oracle.surrogate_value(x) < oracle.surrogate_band;
    if (!check) continue;

    Membership verdict = basin_membership(x, oracle, model, op);
    if (verdict == Membership::Undecided) {
      BasinOracle esc = oracle;
      esc.T_flow *= 2.0;
      verdict = basin_membership(x, esc, model, op);
      if (verdict == Membership::Undecided) {
        rec.escalated = true;
        verdict = Membership::Outside;
      }
    }
    if (verdict == Membership::Outside) {
      rec.tau = cfg.dt * static_cast<double>(k);
      rec.steps = k;
      finish_record(rec, x, saddles);
      return rec;
    }
    cooldown_until = k + params.surrogate_cooldown;
  }
}

}  // namespace

std::vector<ExitRecord> run_exit_mc(const Field& x0, const ExitMcParams& params,
                                    const BasinOracle& oracle,
                                    const std::vector<Equilibrium>& saddles,
                                    const ModelSpec& model, const OperatorDisc& op,
                                    const SimConfig& cfg, const NoiseStream& root_stream) {
  if (basin_membership(x0, oracle, model, op) != Membership::Inside)
    throw Error("exit MC start point is not inside the basin per the oracle");
  const std::size_t total = params.eps_list.size() * static_cast<std::size_t>(params.n_samples);
  std::vector<ExitRecord> records(total);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      const std::size_t e = job / params.n_samples;
      records[job] = run_one_trajectory(x0, params.eps_list[e],
                                        static_cast<std::uint32_t>(job), params, oracle,
                                        saddles, model, op, cfg, root_stream);
    }
  };
  const int nw = std::max(1, params.workers);
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

ScalingReport exit_scaling_report(const std::vector<ExitRecord>& records) {
  std::map<double, std::vector<const ExitRecord*>> by_eps;
  for (const auto& r : records) by_eps[r.epsilon].push_back(&r);
  if (by_eps.size() < 3)
    throw InsufficientData("need at least 3 distinct epsilon values");

  ScalingReport rep;
  for (const auto& [eps, recs] : by_eps) {
    std::vector<double> taus;
    int censored = 0;
    for (const ExitRecord* r : recs) {
      if (r->censored) {
        ++censored;
      } else {
        taus.push_back(r->tau);
      }
    }
    ScalingRow row;
    row.epsilon = eps;
    row.n = static_cast<int>(recs.size());
    row.censor_rate = static_cast<double>(censored) / recs.size();
    if (!taus.empty()) {
      double s = 0.0;
      for (double t : taus) s += t;
      row.mean_tau = s / taus.size();
      std::sort(taus.begin(), taus.end());
      row.median_tau = taus[taus.size() / 2];
      row.eps_log_mean_tau = eps * std::log(row.mean_tau);
      row.eps_log_median_tau = eps * std::log(row.median_tau);
    }
    rep.rows.push_back(row);
  }
  // uncensored majority required for the level fit
  std::vector<const ScalingRow*> usable;
  for (const auto& r : rep.rows)
    if (r.censor_rate < 0.5 && r.mean_tau > 0) usable.push_back(&r);
  if (usable.size() < 3)
    throw InsufficientData("fewer than 3 epsilon values with an uncensored majority");

  auto fit_level = [](const std::vector<std::pair<double, double>>& pts) {
    // least squares y = level + b*eps
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (auto [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return (sy - b * sx) / n;
  };

  std::vector<std::pair<double, double>> pts;
  for (const ScalingRow* r : usable) pts.emplace_back(r->epsilon, r->eps_log_mean_tau);
  rep.level_estimate = fit_level(pts);

  // bootstrap over trajectories within each epsilon
  std::mt19937_64 rng(12345);
  std::vector<double> boots;
  for (int b = 0; b < 200; ++b) {
    std::vector<std::pair<double, double>> bpts;
    for (const ScalingRow* r : usable) {
      std::vector<double> taus;
      for (const auto& rec : records)
        if (rec.epsilon == r->epsilon && !rec.censored) taus.push_back(rec.tau);
      if (taus.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, taus.size() - 1);
      double s = 0.0;
      for (std::size_t i = 0; i < taus.size(); ++i) s += taus[pick(rng)];
      bpts.emplace_back(r->epsilon, r->epsilon * std::log(s / taus.size()));
    }
    if (bpts.size() >= 3) boots.push_back(fit_level(bpts));
  }
  std::sort(boots.begin(), boots.end());
  if (!boots.empty()) {
    rep.level_ci_low = boots[static_cast<std::size_t>(0.025 * boots.size())];
    rep.level_ci_high = boots[std::min(boots.size() - 1,
                                       static_cast<std::size_t>(0.975 * boots.size()))];
  }
  double max_censor = 0.0;
  for (const auto& r : rep.rows) max_censor = std::max(max_censor, r.censor_rate);
  if (max_censor > 0.1) {
    rep.censoring_heavy = true;
    const double mid = rep.level_estimate;
    const double scale = 1.0 / (1.0 - std::min(max_censor, 0.9));
    rep.level_ci_low = mid + (rep.level_ci_low - mid) * scale;
    rep.level_ci_high = mid + (rep.level_ci_high - mid) * scale;
  }
  return rep;
}

ShapeReport exit_shape_histogram(const std::vector<ExitRecord>& records,
                                 const std::vector<Equilibrium>& saddles, double delta) {
  std::map<double, std::vector<const ExitRecord*>> by_eps;
  for (const auto& r : records)
    if (!r.censored) by_eps[r.epsilon].push_back(&r);
  ShapeReport rep;
  for (const auto& [eps, recs] : by_eps) {
    ShapeRow row;
    row.epsilon = eps;
    row.delta = delta;
    for (const Equilibrium& s : saddles) {
      if (s.unstable_count == 0) continue;
      row.mass[s.label] = 0.0;
      row.frac_within[s.label] = 0.0;
    }
    for (const ExitRecord* r : recs) {
      if (row.mass.count(r->nearest_saddle)) row.mass[r->nearest_saddle] += 1.0;
      for (const Equilibrium& s : saddles) {
        if (s.unstable_count == 0) continue;
        if (sup_norm(r->exit_shape - s.state) <= delta) row.frac_within[s.label] += 1.0;
      }
    }
    const double n = static_cast<double>(recs.size());
    if (n > 0) {
      for (auto& [k, v] : row.mass) v /= n;
      for (auto& [k, v] : row.frac_within) v /= n;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace rdmeta
