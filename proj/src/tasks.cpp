#include "rdmeta/tasks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "rdmeta/exit.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace rdmeta {

namespace {

std::string fmt(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

void write_text(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw TaskError("cannot write " + p.string());
  out << content;
}

void write_json(const fs::path& p, const ordered_json& j) { write_text(p, j.dump(2) + "\n"); }

std::string field_csv(const Field& x) {
  std::string s = "component,node,xi,value\n";
  for (int i = 0; i < x.components(); ++i)
    for (int j = 0; j < x.nodes(); ++j)
      s += std::to_string(i) + "," + std::to_string(j) + "," + fmt(x.grid().node(j)) + "," +
           fmt(x.at(i, j)) + "\n";
  return s;
}

/// Everything a task needs, assembled once from the config.
struct Ctx {
  const ExperimentConfig& cfg;
  ModelSpec model;
  GridSpec grid;
  OperatorDisc op;
  SimConfig sim;
  std::uint64_t seed = 1;
  int workers = 1;
  fs::path outdir;
  std::ostream& out;
  std::vector<std::string> outputs;  // recorded in the manifest

  void emit(const std::string& name, const std::string& content) {
    write_text(outdir / name, content);
    outputs.push_back(name);
  }
  void emit_json(const std::string& name, const ordered_json& j) {
    write_json(outdir / name, j);
    outputs.push_back(name);
  }
};

Field init_field(const Ctx& ctx) {
  const std::string kind = ctx.cfg.get_string("init", "kind", "zero");
  if (kind == "zero") return Field(ctx.grid);
  if (kind == "constant") {
    const double c = ctx.cfg.get_double("init", "value");
    Field x(ctx.grid);
    x.fill(c);
    return x;
  }
  if (kind == "sine") {
    const double a = ctx.cfg.get_double("init", "amplitude", 1.0);
    const double L = ctx.grid.length_L;
    return sample_field(ctx.grid, [&](double xi) { return a * std::sin(M_PI * xi / L); });
  }
  throw ConfigError("init.kind", "expected zero | constant | sine, got '" + kind + "'");
}

std::vector<Field> equilibrium_seeds(const Ctx& ctx) {
  std::vector<double> amps{-2, -1, -0.5, 0, 0.5, 1, 2};
  if (ctx.cfg.has("equilibria", "seeds")) amps = ctx.cfg.get_double_list("equilibria", "seeds");
  const double L = ctx.grid.length_L;
  std::vector<Field> seeds;
  for (double a : amps)
    seeds.push_back(
        sample_field(ctx.grid, [&](double xi) { return a * std::sin(M_PI * xi / L); }));
  return seeds;
}

ordered_json equilibria_json(const std::vector<Equilibrium>& eqs) {
  ordered_json arr = ordered_json::array();
  for (const Equilibrium& e : eqs) {
    ordered_json j;
    j["label"] = e.label;
    j["residual"] = e.residual;
    j["unstable_count"] = e.unstable_count;
    j["sup_norm"] = sup_norm(e.state);
    j["leading_eigenvalues"] = e.leading_eigenvalues;
    arr.push_back(j);
  }
  return arr;
}

const Equilibrium& pick(const std::vector<Equilibrium>& eqs, const std::string& label,
                        const std::string& field) {
  for (const Equilibrium& e : eqs)
    if (e.label == label) return e;
  std::string have;
  for (const Equilibrium& e : eqs) have += (have.empty() ? "" : ", ") + e.label;
  throw ConfigError(field, "no equilibrium labeled '" + label + "' (found: " + have + ")");
}

std::string path_csv(const TrajectoryPath& path) {
  std::string s = "k,t,component,node,value\n";
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    const Field& x = path.states[k];
    for (int i = 0; i < x.components(); ++i)
      for (int j = 0; j < x.nodes(); ++j)
        s += std::to_string(k) + "," + fmt(path.time(k)) + "," + std::to_string(i) + "," +
             std::to_string(j) + "," + fmt(x.at(i, j)) + "\n";
  }
  return s;
}

// ---- tasks -----------------------------------------------------------------

void task_trajectory(Ctx& ctx, bool noisy) {
  SimConfig sim = ctx.sim;
  if (!noisy) sim.epsilon = 0.0;
  const int stride = static_cast<int>(ctx.cfg.get_int("sim", "observer_stride", 1));
  if (stride < 1) throw ConfigError("sim.observer_stride", "must be >= 1");
  sim.observer_stride = 1;

  Field x0 = init_field(ctx);
  std::string stats = "t,sup_norm,h_norm\n";
  std::size_t k = 0;
  Field last = x0;
  Observer obs = [&](double t, const Field& x) {
    if (k % static_cast<std::size_t>(stride) == 0)
      stats += fmt(t) + "," + fmt(sup_norm(x)) + "," + fmt(h_norm(x)) + "\n";
    last = x;
    ++k;
    return true;
  };
  if (noisy) {
    NoiseStream stream = split_stream({ctx.seed, 0, 0}, 0);
    integrate_spde(x0, ctx.model, ctx.op, sim, stream, obs);
  } else {
    integrate_skeleton(x0, ControlPath{}, ctx.model, ctx.op, sim, obs);
  }
  ctx.emit("stats.csv", stats);
  ctx.emit("final_state.csv", field_csv(last));
}

void task_equilibria(Ctx& ctx) {
  auto eqs = find_equilibria(ctx.model, ctx.op, equilibrium_seeds(ctx));
  ordered_json j;
  j["equilibria"] = equilibria_json(eqs);
  ctx.emit_json("equilibria.json", j);
  fs::create_directories(ctx.outdir / "states");
  for (const Equilibrium& e : eqs) ctx.emit("states/" + e.label + ".csv", field_csv(e.state));
}

THorizonSchedule schedule_from(const Ctx& ctx, const std::string& section) {
  THorizonSchedule sched;
  if (ctx.cfg.has(section, "horizons")) sched.horizons = ctx.cfg.get_double_list(section, "horizons");
  sched.N_t = static_cast<int>(ctx.cfg.get_int(section, "n_t", 200));
  if (sched.N_t < 2) throw ConfigError(section + ".n_t", "must be >= 2");
  for (double T : sched.horizons)
    if (T <= 0) throw ConfigError(section + ".horizons", "horizons must be positive");
  return sched;
}

void task_mam(Ctx& ctx) {
  auto eqs = find_equilibria(ctx.model, ctx.op, equilibrium_seeds(ctx));
  auto endpoint = [&](const std::string& key, const std::string& fallback) -> Field {
    const std::string label = ctx.cfg.get_string("mam", key, fallback);
    if (label == "zero") return Field(ctx.grid);
    return pick(eqs, label, "mam." + key).state;
  };
  Field x = endpoint("from", "stable_0");
  Field y = endpoint("to", "zero");
  const double penalty = ctx.cfg.get_double("mam", "penalty_weight", 100.0);
  QuasipotentialResult res =
      quasipotential(x, y, ctx.model, ctx.op, schedule_from(ctx, "mam"), {}, penalty);

  ordered_json j;
  j["value"] = res.value;
  j["best_T"] = res.best_T;
  j["any_converged"] = res.any_converged;
  ordered_json per = ordered_json::array();
  for (auto [T, v] : res.per_horizon) per.push_back({{"T", T}, {"action", v}});
  j["per_horizon"] = per;
  ctx.emit_json("mam.json", j);
  ctx.emit("best_path.csv", path_csv(res.best_path));

  std::string plot = "T,action\n";
  for (auto [T, v] : res.per_horizon) plot += fmt(T) + "," + fmt(v) + "\n";
  ctx.emit("action_vs_T.csv", plot);
}

void task_quasipotential(Ctx& ctx) {
  auto eqs = find_equilibria(ctx.model, ctx.op, equilibrium_seeds(ctx));
  const std::string attr_label = ctx.cfg.get_string("quasipotential", "attractor", "stable_0");
  const Equilibrium& attr = pick(eqs, attr_label, "quasipotential.attractor");
  BoundaryReport rep =
      boundary_quasipotential(attr, eqs, ctx.model, ctx.op, schedule_from(ctx, "quasipotential"));
  ordered_json j;
  j["attractor"] = attr_label;
  j["per_saddle"] = rep.per_saddle;
  j["boundary_value"] = rep.min_value;
  j["argmin"] = rep.argmin;
  ctx.emit_json("quasipotential.json", j);
}

BasinOracle oracle_from(const Ctx& ctx, const std::vector<Equilibrium>& eqs,
                        const Equilibrium& attr) {
  std::vector<Field> others;
  for (const Equilibrium& e : eqs)
    if (e.unstable_count == 0 && e.label != attr.label) others.push_back(e.state);
  const double rho_in = ctx.cfg.get_double("exit", "rho_in", 0.1);
  const double t_flow = ctx.cfg.get_double("exit", "t_flow", 50.0);
  if (rho_in <= 0) throw ConfigError("exit.rho_in", "must be positive");
  return make_basin_oracle(attr, eqs, others, ctx.model, ctx.op, rho_in, t_flow);
}

std::string records_csv_header() {
  return "index,epsilon,trajectory,seed,tau,steps,censored,blowup,escalated,nearest_saddle,"
         "nearest_dist,shape_file\n";
}

void write_records(Ctx& ctx, const std::vector<ExitRecord>& records) {
  fs::create_directories(ctx.outdir / "shapes");
  std::string csv = records_csv_header();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ExitRecord& r = records[i];
    char name[32];
    std::snprintf(name, sizeof name, "shapes/rec_%06zu.csv", i);
    ctx.emit(name, field_csv(r.exit_shape));
    csv += std::to_string(i) + "," + fmt(r.epsilon) + "," + std::to_string(r.trajectory) + "," +
           std::to_string(r.seed) + "," + fmt(r.tau) + "," + std::to_string(r.steps) + "," +
           std::to_string(r.censored ? 1 : 0) + "," + std::to_string(r.blowup ? 1 : 0) + "," +
           std::to_string(r.escalated ? 1 : 0) + "," + r.nearest_saddle + "," +
           fmt(r.nearest_dist) + "," + name + "\n";
  }
  ctx.emit("records.csv", csv);
}

constexpr const char* kOracleNote =
    "exit statistics are conditional on the flow-based basin-membership oracle's verdicts";

ordered_json scaling_json(const ScalingReport& rep) {
  ordered_json j;
  j["note"] = kOracleNote;
  ordered_json rows = ordered_json::array();
  for (const ScalingRow& r : rep.rows)
    rows.push_back({{"epsilon", r.epsilon},
                    {"n", r.n},
                    {"mean_tau", r.mean_tau},
                    {"median_tau", r.median_tau},
                    {"eps_log_mean_tau", r.eps_log_mean_tau},
                    {"eps_log_median_tau", r.eps_log_median_tau},
                    {"censor_rate", r.censor_rate}});
  j["rows"] = rows;
  j["level_estimate"] = rep.level_estimate;
  j["level_ci_low"] = rep.level_ci_low;
  j["level_ci_high"] = rep.level_ci_high;
  j["censoring_heavy"] = rep.censoring_heavy;
  return j;
}

ordered_json shape_json(const ShapeReport& rep) {
  ordered_json j;
  j["note"] = kOracleNote;
  ordered_json rows = ordered_json::array();
  for (const ShapeRow& r : rep.rows)
    rows.push_back({{"epsilon", r.epsilon},
                    {"delta", r.delta},
                    {"mass", r.mass},
                    {"frac_within", r.frac_within}});
  j["rows"] = rows;
  return j;
}

void emit_scaling_outputs(Ctx& ctx, const std::vector<ExitRecord>& records) {
  try {
    ScalingReport rep = exit_scaling_report(records);
    ctx.emit_json("scaling.json", scaling_json(rep));
    std::string plot = "epsilon,eps_log_mean_tau,eps_log_median_tau,censor_rate\n";
    for (const ScalingRow& r : rep.rows)
      plot += fmt(r.epsilon) + "," + fmt(r.eps_log_mean_tau) + "," + fmt(r.eps_log_median_tau) +
              "," + fmt(r.censor_rate) + "\n";
    ctx.emit("scaling_plot.csv", plot);
  } catch (const InsufficientData& e) {
    ordered_json j;
    j["note"] = kOracleNote;
    j["error"] = e.what();
    ctx.emit_json("scaling.json", j);
  }
}

void task_exit_mc(Ctx& ctx) {
  auto eqs = find_equilibria(ctx.model, ctx.op, equilibrium_seeds(ctx));
  const std::string attr_label = ctx.cfg.get_string("exit", "attractor", "stable_0");
  const Equilibrium& attr = pick(eqs, attr_label, "exit.attractor");
  BasinOracle oracle = oracle_from(ctx, eqs, attr);

  ExitMcParams params;
  params.eps_list = ctx.cfg.get_double_list("exit", "eps");
  for (double e : params.eps_list)
    if (e <= 0) throw ConfigError("exit.eps", "noise levels must be positive");
  params.n_samples = static_cast<int>(ctx.cfg.get_int("exit", "n_samples", 100));
  if (params.n_samples < 1) throw ConfigError("exit.n_samples", "must be >= 1");
  params.max_steps_per_traj =
      static_cast<std::uint64_t>(ctx.cfg.get_int("exit", "max_steps", 400000000ll));
  params.max_seconds_per_traj = ctx.cfg.get_double("exit", "max_seconds", 0.0);
  params.checkpoint_stride =
      static_cast<std::uint64_t>(ctx.cfg.get_int("exit", "checkpoint_stride", 200000));
  params.workers = ctx.workers;

  auto records = run_exit_mc(attr.state, params, oracle, eqs, ctx.model, ctx.op, ctx.sim,
                             {ctx.seed, 0, 0});
  write_records(ctx, records);
  emit_scaling_outputs(ctx, records);
  const double delta = ctx.cfg.get_double("exit", "delta", 0.5);
  ctx.emit_json("shape.json", shape_json(exit_shape_histogram(records, eqs, delta)));
}

std::vector<ExitRecord> load_records(const fs::path& dir, const GridSpec& grid) {
  std::ifstream in(dir / "records.csv");
  if (!in) throw TaskError("cannot open " + (dir / "records.csv").string());
  std::string line;
  if (!std::getline(in, line) || line != records_csv_header().substr(0, line.size()) ||
      line.empty())
    throw TaskError("records.csv: unexpected header");
  std::vector<ExitRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
    if (cols.size() != 12) throw TaskError("records.csv: bad row '" + line + "'");
    ExitRecord r;
    r.epsilon = std::stod(cols[1]);
    r.trajectory = static_cast<std::uint32_t>(std::stoul(cols[2]));
    r.seed = std::stoull(cols[3]);
    r.tau = std::stod(cols[4]);
    r.steps = std::stoull(cols[5]);
    r.censored = cols[6] == "1";
    r.blowup = cols[7] == "1";
    r.escalated = cols[8] == "1";
    r.nearest_saddle = cols[9];
    r.nearest_dist = std::stod(cols[10]);
    std::ifstream sh(dir / cols[11]);
    if (!sh) throw TaskError("missing shape file " + cols[11]);
    Field shape(grid);
    std::string srow;
    std::getline(sh, srow);  // header
    while (std::getline(sh, srow)) {
      if (srow.empty()) continue;
      std::istringstream ss(srow);
      std::string a, b, xi, v;
      std::getline(ss, a, ',');
      std::getline(ss, b, ',');
      std::getline(ss, xi, ',');
      std::getline(ss, v, ',');
      shape.at(std::stoi(a), std::stoi(b)) = std::stod(v);
    }
    r.exit_shape = shape;
    records.push_back(std::move(r));
  }
  return records;
}

void task_report(Ctx& ctx, bool shapes_only) {
  const std::string input = ctx.cfg.get_string("report", "input");
  auto records = load_records(input, ctx.grid);
  if (!shapes_only) emit_scaling_outputs(ctx, records);
  auto eqs = find_equilibria(ctx.model, ctx.op, equilibrium_seeds(ctx));
  const double delta = ctx.cfg.get_double("exit", "delta", 0.5);
  ctx.emit_json("shape.json", shape_json(exit_shape_histogram(records, eqs, delta)));
}

void task_validate(Ctx& ctx) {
  const double radius = ctx.cfg.get_double("validate", "radius", 5.0);
  const int n = static_cast<int>(ctx.cfg.get_int("validate", "n_samples", 200));
  ValidationReport rep = validate_assumptions(ctx.model, radius, n, ctx.seed);
  ordered_json j;
  ordered_json checks = ordered_json::array();
  for (const CheckResult& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"worst_margin", c.worst_margin},
                      {"detail", c.detail}});
  j["checks"] = checks;
  j["all_passed"] = rep.all_passed();
  ctx.emit_json("validation.json", j);
  ctx.out << "validation: " << (rep.all_passed() ? "all assumptions hold" : "FAILED checks present")
          << "\n";
}

struct TaskDef {
  const char* name;
  const char* doc;
  std::function<void(Ctx&)> fn;
};

const std::vector<TaskDef>& task_table() {
  static const std::vector<TaskDef> defs = {
      {"simulate",
       "Integrates one noisy trajectory of the reaction-diffusion system.\n"
       "Target: sample path of the small-noise dynamics.\n"
       "Config: [model] name + parameter overrides; [grid] M; [sim] dt, t_max,\n"
       "  epsilon, seed, observer_stride; [init] kind = zero|constant|sine,\n"
       "  value, amplitude.\n"
       "Outputs: stats.csv (t, sup/H norms), final_state.csv.",
       [](Ctx& c) { task_trajectory(c, true); }},
      {"flow",
       "Integrates the deterministic (zero-noise) flow.\n"
       "Target: the unperturbed dynamics and its attractors.\n"
       "Config: as simulate; epsilon is ignored.\n"
       "Outputs: stats.csv, final_state.csv.",
       [](Ctx& c) { task_trajectory(c, false); }},
      {"equilibria",
       "Finds steady states by damped Newton from sine-profile seeds and\n"
       "classifies their linear stability.\n"
       "Target: stable equilibria and the saddles on the basin boundary.\n"
       "Config: [equilibria] seeds = comma list of seed amplitudes.\n"
       "Outputs: equilibria.json, states/<label>.csv.",
       task_equilibria},
      {"mam",
       "Minimizes the action 0.5*int |u|_H^2 dt over paths between two states\n"
       "across a horizon schedule (minimum action method).\n"
       "Target: the quasipotential V(x,y) between the endpoints.\n"
       "Config: [mam] from, to (equilibrium label or 'zero'),\n"
       "  horizons = comma list (default 5,10,20,40), n_t (default 200),\n"
       "  penalty_weight for region constraints (default 100).\n"
       "Outputs: mam.json, best_path.csv, action_vs_T.csv.",
       task_mam},
      {"quasipotential",
       "Computes V(x*, K) for each saddle K on the basin boundary and reports\n"
       "the minimum as V(x*, boundary).\n"
       "Target: the exit-rate level that epsilon*log E tau approaches.\n"
       "Config: [quasipotential] attractor (label), horizons, n_t.\n"
       "Outputs: quasipotential.json.",
       task_quasipotential},
      {"exit-mc",
       "Monte Carlo exit times/shapes from the basin of a stable equilibrium.\n"
       "Target: epsilon*log(mean tau), whose small-noise level is the\n"
       "quasipotential V(x*, boundary).\n"
       "Config: [exit] eps = comma list, n_samples, attractor, rho_in, t_flow,\n"
       "  max_steps, max_seconds, checkpoint_stride, delta; [sim] dt, seed.\n"
       "Outputs: records.csv + shapes/, scaling.json, scaling_plot.csv, shape.json.",
       task_exit_mc},
      {"exit-shape",
       "Recomputes the exit-shape histogram from a recorded exit-mc run.\n"
       "Target: concentration of exit shapes near the minimizing saddle.\n"
       "Config: [report] input = exit-mc output directory; [exit] delta.\n"
       "Outputs: shape.json.",
       [](Ctx& c) { task_report(c, true); }},
      {"validate",
       "Monte Carlo check of the structural assumptions (dissipativity,\n"
       "polynomial growth, uniform ellipticity, diffusion Lipschitz bound).\n"
       "Config: [validate] radius, n_samples.\n"
       "Outputs: validation.json.",
       task_validate},
      {"report",
       "Regenerates the scaling and shape reports from a recorded exit-mc\n"
       "output directory; deterministic, byte-identical for identical inputs.\n"
       "Config: [report] input = exit-mc output directory; [exit] delta.\n"
       "Outputs: scaling.json, scaling_plot.csv, shape.json.",
       [](Ctx& c) { task_report(c, false); }},
  };
  return defs;
}

}  // namespace

std::vector<std::string> task_names() {
  std::vector<std::string> names;
  for (const TaskDef& d : task_table()) names.push_back(d.name);
  return names;
}

std::string describe_task(const std::string& name) {
  for (const TaskDef& d : task_table())
    if (name == d.name) return std::string(d.name) + ": " + d.doc + "\n";
  std::string valid;
  for (const TaskDef& d : task_table()) valid += std::string(valid.empty() ? "" : ", ") + d.name;
  throw UnknownTask("unknown task '" + name + "' (valid: " + valid + ")");
}

int run_task(const std::string& config_path, const TaskOptions& opts, std::ostream& out,
             std::ostream& err) {
  const auto t_start = std::chrono::steady_clock::now();
  std::string task_name;
  try {
    ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
    task_name = cfg.get_string("task", "name");
    const TaskDef* def = nullptr;
    for (const TaskDef& d : task_table())
      if (task_name == d.name) def = &d;
    if (def == nullptr) {
      std::string valid;
      for (const TaskDef& d : task_table())
        valid += std::string(valid.empty() ? "" : ", ") + d.name;
      throw ConfigError("task.name", "unknown task '" + task_name + "' (valid: " + valid + ")");
    }

    std::map<std::string, double> params;
    for (const auto& [k, v] : cfg.section_items("model"))
      if (k != "name") params[k] = cfg.get_double("model", k);
    if (cfg.has("grid", "L")) params["L"] = cfg.get_double("grid", "L");
    ModelSpec model;
    try {
      model = make_model(cfg.get_string("model", "name", "allen-cahn"), params);
    } catch (const Error& e) {
      throw ConfigError("model.name", e.what());
    }
    const std::int64_t M = cfg.get_int("grid", "M", 199);
    if (M < 3 || M > 1000000) throw ConfigError("grid.M", "must be in [3, 1e6]");
    GridSpec grid = make_grid(model.length_L, static_cast<int>(M), model.r);
    OperatorDisc op = build_operator(model, grid);

    SimConfig sim;
    double eps_max = cfg.get_double("sim", "epsilon", 0.0);
    if (cfg.has("exit", "eps"))
      for (double e : cfg.get_double_list("exit", "eps")) eps_max = std::max(eps_max, e);
    sim.dt = cfg.get_double("sim", "dt", default_dt(grid, eps_max));
    if (sim.dt <= 0) throw ConfigError("sim.dt", "must be positive");
    sim.t_max = cfg.get_double("sim", "t_max", 1.0);
    if (sim.t_max <= 0) throw ConfigError("sim.t_max", "must be positive");
    sim.epsilon = cfg.get_double("sim", "epsilon", 0.0);
    if (sim.epsilon < 0) throw ConfigError("sim.epsilon", "must be nonnegative");
    sim.blowup_threshold = cfg.get_double("sim", "blowup_threshold", 1e6);

    std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("sim", "seed", 1));

    int workers = static_cast<int>(cfg.get_int("sim", "workers", 1));
    if (const char* w = std::getenv("RDMETA_WORKERS")) workers = std::atoi(w);
    if (opts.workers_override > 0) workers = opts.workers_override;
    if (workers < 1) throw ConfigError("sim.workers", "must be >= 1");

    std::string outdir = cfg.get_string("output", "dir", "out");
    if (const char* o = std::getenv("RDMETA_OUTPUT_DIR")) outdir = o;
    if (!opts.output_dir_override.empty()) outdir = opts.output_dir_override;
    fs::create_directories(outdir);

    Ctx ctx{cfg, std::move(model), grid, std::move(op), sim, seed, workers, outdir, out, {}};
    def->fn(ctx);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    ordered_json manifest;
    manifest["task"] = task_name;
    manifest["version"] = kVersion;
    manifest["config"] = config_path;
    manifest["config_hash"] = hash_hex;
    manifest["seed"] = seed;
    manifest["workers"] = workers;
    manifest["outputs"] = ctx.outputs;
    manifest["wall_seconds"] = wall;
    manifest["finished_at"] =
        static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                      std::chrono::system_clock::now().time_since_epoch())
                                      .count());
    write_json(fs::path(outdir) / "manifest.json", manifest);
    out << task_name << ": ok, " << ctx.outputs.size() << " output file(s) in " << outdir << "\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "task error" << (task_name.empty() ? "" : " (" + task_name + ")") << ": " << e.what()
        << "\n";
    return 2;
  }
}

}  // namespace rdmeta
