#include "rdmeta/model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "rdmeta/kernels.hpp"

namespace rdmeta {

namespace {

double get(const std::map<std::string, double>& p, const std::string& k, double dflt) {
  auto it = p.find(k);
  return it == p.end() ? dflt : it->second;
}

EllipticCoeffs make_coeffs(const std::map<std::string, double>& p, double L) {
  const double a0 = get(p, "a", 1.0);
  const double amp = get(p, "a_sine", 0.0);
  const double b0 = get(p, "b", 0.0);
  EllipticCoeffs c;
  if (amp == 0.0) {
    c.a = [a0](double) { return a0; };
  } else {
    c.a = [a0, amp, L](double xi) { return a0 * (1.0 + amp * std::sin(M_PI * xi / L)); };
  }
  if (b0 != 0.0) c.b = [b0](double) { return b0; };
  return c;
}

void identity_g(int r, const double*, double* g) {
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) g[i * r + j] = (i == j) ? 1.0 : 0.0;
}

}  // namespace

double ModelSpec::reaction_lipschitz(double R) const {
  switch (reaction_kind) {
    case ReactionKind::AllenCahn:
      return 1.0 + 3.0 * R * R;
    case ReactionKind::Quintic:
      return quintic_mu + 3.0 * quintic_beta * R * R + 5.0 * R * R * R * R;
    case ReactionKind::CoupledCubic:
      return 2.0 + 3.0 * R * R;
    case ReactionKind::Linear:
      return 1.0;
    case ReactionKind::Custom:
      break;
  }
  // sample the Jacobian row-sum norm on a small stencil
  double lip = 1.0;
  std::vector<double> x(r, 0.0), J(r * r);
  for (int axis = 0; axis < r; ++axis) {
    for (double s : {-R, 0.0, R}) {
      std::fill(x.begin(), x.end(), 0.0);
      x[axis] = s;
      reaction_jacobian(x.data(), J.data());
      for (int i = 0; i < r; ++i) {
        double row = 0.0;
        for (int j = 0; j < r; ++j) row += std::fabs(J[i * r + j]);
        lip = std::max(lip, row);
      }
    }
  }
  return 1.5 * lip;
}

std::vector<std::string> builtin_model_names() {
  return {"allen-cahn", "allen-cahn-mult", "coupled-cubic", "quintic", "linear"};
}

ModelSpec make_model(const std::string& name, const std::map<std::string, double>& params) {
  ModelSpec m;
  m.name = name;
  m.length_L = get(params, "L", 5.0);
  m.lambda = get(params, "lambda", 0.5);
  m.rho = get(params, "rho", 2.0);
  m.growth_C = get(params, "C", 10.0);
  m.kappa0 = get(params, "kappa0", 0.9);
  m.kappa1 = get(params, "kappa1", 1.1);
  m.kappa_lip = get(params, "kappa_lip", 0.0);

  if (name == "allen-cahn" || name == "allen-cahn-mult") {
    m.r = 1;
    m.reaction_kind = ReactionKind::AllenCahn;
    m.reaction = [](const double* x, double* f) { f[0] = x[0] - x[0] * x[0] * x[0]; };
    m.reaction_jacobian = [](const double* x, double* j) { j[0] = 1.0 - 3.0 * x[0] * x[0]; };
  } else if (name == "quintic") {
    m.r = 1;
    m.reaction_kind = ReactionKind::Quintic;
    m.quintic_mu = get(params, "mu", 0.5);
    m.quintic_beta = get(params, "beta", 4.0);
    m.rho = get(params, "rho", 4.0);
    // lambda must stay below the worst straddle coefficient of -u^5
    m.lambda = get(params, "lambda", 0.2);
    m.growth_C = get(params, "C", 50.0);
    const double mu = m.quintic_mu, beta = m.quintic_beta;
    m.reaction = [mu, beta](const double* x, double* f) {
      const double u2 = x[0] * x[0];
      f[0] = x[0] * (-mu + u2 * (beta - u2));
    };
    m.reaction_jacobian = [mu, beta](const double* x, double* j) {
      const double u2 = x[0] * x[0];
      j[0] = -mu + 3.0 * beta * u2 - 5.0 * u2 * u2;
    };
  } else if (name == "coupled-cubic") {
    m.r = 2;
    m.reaction_kind = ReactionKind::CoupledCubic;
    m.lambda = get(params, "lambda", 0.25);
    const double c = get(params, "coupling", 0.1);
    m.reaction = [c](const double* x, double* f) {
      f[0] = x[0] - x[0] * x[0] * x[0] - c * x[1];
      f[1] = x[1] - x[1] * x[1] * x[1] + c * x[0];
    };
    m.reaction_jacobian = [c](const double* x, double* j) {
      j[0] = 1.0 - 3.0 * x[0] * x[0];
      j[1] = -c;
      j[2] = c;
      j[3] = 1.0 - 3.0 * x[1] * x[1];
    };
  } else if (name == "linear") {
    m.r = 1;
    m.reaction_kind = ReactionKind::Linear;
    m.reaction = [](const double* x, double* f) { f[0] = x[0]; };
    m.reaction_jacobian = [](const double*, double* j) { j[0] = 1.0; };
  } else {
    throw ConfigError("model.name", "unknown built-in model '" + name + "'");
  }

  for (int i = 0; i < m.r; ++i) m.coeffs.push_back(make_coeffs(params, m.length_L));

  if (name == "allen-cahn-mult") {
    m.g_kind = DiffusionKind::ScalarTanh;
    m.kappa0 = get(params, "kappa0", 0.75);
    m.kappa1 = get(params, "kappa1", 1.25);
    m.kappa_lip = get(params, "kappa_lip", 0.25);
    m.diffusion = [](const double* x, double* g) { g[0] = 1.0 + 0.25 * std::tanh(x[0]); };
    m.diffusion_gradient = [](const double* x, double* dg) {
      const double t = std::tanh(x[0]);
      dg[0] = 0.25 * (1.0 - t * t);
    };
  } else {
    m.g_kind = DiffusionKind::Identity;
    const int r = m.r;
    m.diffusion = [r](const double* x, double* g) { identity_g(r, x, g); };
    m.diffusion_gradient = [r](const double*, double* dg) {
      std::fill(dg, dg + r * r * r, 0.0);
    };
  }
  return m;
}

OperatorDisc build_operator(const ModelSpec& model, const GridSpec& grid, int eigen_limit) {
  if (grid.components_r != model.r)
    throw ShapeMismatch("grid component count does not match model");
  return OperatorDisc::build(model.coeffs, grid, eigen_limit);
}

Field eval_F(const ModelSpec& model, const Field& x) {
  Field out(x.grid());
  const int M = x.nodes();
  if (model.r == 1 && model.reaction_kind == ReactionKind::AllenCahn) {
    kernels::allen_cahn(x.data(), out.data(), M);
  } else if (model.r == 1 && model.reaction_kind == ReactionKind::Quintic) {
    kernels::quintic(model.quintic_mu, model.quintic_beta, x.data(), out.data(), M);
  } else {
    const int r = model.r;
    std::vector<double> xi(r), fi(r);
    for (int j = 0; j < M; ++j) {
      for (int i = 0; i < r; ++i) xi[i] = x.at(i, j);
      model.reaction(xi.data(), fi.data());
      for (int i = 0; i < r; ++i) out.at(i, j) = fi[i];
    }
  }
  // max_abs would swallow NaN (std::max drops it); scan explicitly
  if (!out.finite()) throw NonFiniteOutput("reaction output not finite");
  return out;
}

void eval_F_jacobian(const ModelSpec& model, const Field& x, std::vector<double>& out) {
  const int M = x.nodes(), r = model.r;
  out.resize(static_cast<std::size_t>(M) * r * r);
  std::vector<double> xi(r);
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < r; ++i) xi[i] = x.at(i, j);
    model.reaction_jacobian(xi.data(), out.data() + static_cast<std::size_t>(j) * r * r);
  }
}

bool diffusion_is_identity(const ModelSpec& model) {
  return model.g_kind == DiffusionKind::Identity;
}

namespace {

enum class GMode { Apply, Inverse, TransposeInverse };

Field apply_g_pointwise(const ModelSpec& model, const Field& x, const Field& h, GMode mode) {
  if (!(x.grid() == h.grid())) throw ShapeMismatch("x and h grids differ");
  if (model.g_kind == DiffusionKind::Identity) return h;
  Field out(x.grid());
  const int M = x.nodes(), r = model.r;
  if (model.g_kind == DiffusionKind::ScalarTanh && r == 1) {
    for (int j = 0; j < M; ++j) {
      const double g = 1.0 + 0.25 * std::tanh(x.at(0, j));
      out.at(0, j) = (mode == GMode::Apply) ? g * h.at(0, j) : h.at(0, j) / g;
    }
    return out;
  }
  Eigen::MatrixXd g(r, r);
  Eigen::VectorXd hv(r);
  std::vector<double> xi(r), gb(r * r);
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < r; ++i) xi[i] = x.at(i, j);
    model.diffusion(xi.data(), gb.data());
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) g(a, b) = gb[a * r + b];
    for (int i = 0; i < r; ++i) hv[i] = h.at(i, j);
    Eigen::VectorXd res;
    if (mode == GMode::Apply) {
      res = g * hv;
    } else {
      if (mode != GMode::Inverse) g.transposeInPlace();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
      if (!lu.isInvertible())
        throw SingularDiffusion("g(x) singular at node " + std::to_string(j));
      res = lu.solve(hv);
    }
    for (int i = 0; i < r; ++i) out.at(i, j) = res[i];
  }
  return out;
}

}  // namespace

Field apply_G(const ModelSpec& model, const Field& x, const Field& h) {
  return apply_g_pointwise(model, x, h, GMode::Apply);
}
Field apply_G_inverse(const ModelSpec& model, const Field& x, const Field& h) {
  return apply_g_pointwise(model, x, h, GMode::Inverse);
}
Field apply_G_transpose_inverse(const ModelSpec& model, const Field& x, const Field& h) {
  return apply_g_pointwise(model, x, h, GMode::TransposeInverse);
}

bool ValidationReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

ValidationReport validate_assumptions(const ModelSpec& model, double sample_radius,
                                      int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error("n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-sample_radius, sample_radius);
  const int r = model.r;

  CheckResult dissip{"dissipativity", true, 1e300, ""};
  CheckResult growth{"growth", true, 1e300, ""};
  CheckResult ellip{"ellipticity", true, 1e300, ""};
  CheckResult glip{"g_lipschitz", true, 1e300, ""};

  std::vector<double> x(r), h(r), y(r), fx(r), fxh(r);
  Eigen::MatrixXd gx(r, r), gy(r, r);
  std::vector<double> gb(r * r);

  auto eval_g = [&](const std::vector<double>& p, Eigen::MatrixXd& out) {
    model.diffusion(p.data(), gb.data());
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) out(a, b) = gb[a * r + b];
  };

  for (int s = 0; s < n_samples; ++s) {
    for (int i = 0; i < r; ++i) {
      x[i] = unif(rng);
      h[i] = unif(rng);
      y[i] = unif(rng);
    }
    double nx = 0.0, nh = 0.0;
    for (int i = 0; i < r; ++i) {
      nx += x[i] * x[i];
      nh += h[i] * h[i];
    }
    nx = std::sqrt(nx);
    nh = std::sqrt(nh);
    if (nh < 1e-12) continue;

    model.reaction(x.data(), fx.data());
    for (int i = 0; i < r; ++i) y[i] = x[i] + h[i];
    model.reaction(y.data(), fxh.data());

    double lhs = 0.0;
    for (int i = 0; i < r; ++i) lhs += (fxh[i] - fx[i]) * h[i];
    lhs /= nh;
    const double rhs = -model.lambda * std::pow(nh, 1.0 + model.rho) +
                       model.growth_C * (1.0 + std::pow(nx, 1.0 + model.rho));
    dissip.worst_margin = std::min(dissip.worst_margin, rhs - lhs);

    double nfx = 0.0;
    for (int i = 0; i < r; ++i) nfx += fx[i] * fx[i];
    nfx = std::sqrt(nfx);
    growth.worst_margin = std::min(
        growth.worst_margin,
        model.growth_C * (1.0 + std::pow(nx, 1.0 + model.rho)) - nfx);

    eval_g(x, gx);
    Eigen::Map<const Eigen::VectorXd> hv(h.data(), r);
    const double ngh = (gx * hv).norm();
    ellip.worst_margin = std::min(ellip.worst_margin,
                                  std::min(ngh - model.kappa0 * nh, model.kappa1 * nh - ngh));

    for (int i = 0; i < r; ++i) y[i] = unif(rng);
    eval_g(y, gy);
    double nxy = 0.0;
    for (int i = 0; i < r; ++i) nxy += (x[i] - y[i]) * (x[i] - y[i]);
    nxy = std::sqrt(nxy);
    const double opn = (gx - gy).jacobiSvd().singularValues()(0);
    glip.worst_margin = std::min(glip.worst_margin, model.kappa_lip * nxy - opn + 1e-12);
  }

  for (CheckResult* c : {&dissip, &growth, &ellip, &glip}) c->passed = c->worst_margin >= 0.0;

  ValidationReport rep;
  rep.checks = {dissip, growth, ellip, glip};
  return rep;
}

}  // namespace rdmeta
