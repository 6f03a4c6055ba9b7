#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rdmeta/grid.hpp"

namespace rdmeta {

enum class ReactionKind { AllenCahn, Quintic, CoupledCubic, Linear, Custom };
enum class DiffusionKind { Identity, ScalarTanh, Custom };

/// Reaction f, diffusion matrix g, elliptic coefficients, and the constants of
/// the dissipativity/ellipticity assumptions. Immutable once built.
struct ModelSpec {
  int r = 1;
  double length_L = 1.0;

  std::vector<EllipticCoeffs> coeffs;  // one per component

  ReactionKind reaction_kind = ReactionKind::Custom;
  double quintic_mu = 0.5, quintic_beta = 4.0;  // used by ReactionKind::Quintic
  std::function<void(const double* x, double* fx)> reaction;
  std::function<void(const double* x, double* jac)> reaction_jacobian;  // r x r row-major

  DiffusionKind g_kind = DiffusionKind::Identity;
  std::function<void(const double* x, double* g)> diffusion;            // r x r row-major
  std::function<void(const double* x, double* dg)> diffusion_gradient;  // dg[(i*r+j)*r+k] = d g_ij / d x_k

  // Assumption constants
  double lambda = 1.0, rho = 2.0, growth_C = 10.0;
  double kappa0 = 0.9, kappa1 = 1.1, kappa_lip = 0.0;

  std::string name = "custom";

  /// Local Lipschitz estimate for f on {|u| <= R}; drives flow sub-stepping.
  double reaction_lipschitz(double R) const;
};

/// Built-in model library; params may override documented keys.
ModelSpec make_model(const std::string& name, const std::map<std::string, double>& params = {});
std::vector<std::string> builtin_model_names();

OperatorDisc build_operator(const ModelSpec& model, const GridSpec& grid,
                            int eigen_limit = 4096);

/// Pointwise Nemytskii lift F(x)(xi) = f(x(xi)).
Field eval_F(const ModelSpec& model, const Field& x);
/// Jacobian Df at every node: out[(i*r+j)] blocks per node, layout [node][i*r+j].
void eval_F_jacobian(const ModelSpec& model, const Field& x, std::vector<double>& out);

Field apply_G(const ModelSpec& model, const Field& x, const Field& h);
Field apply_G_inverse(const ModelSpec& model, const Field& x, const Field& h);
Field apply_G_transpose_inverse(const ModelSpec& model, const Field& x, const Field& h);
bool diffusion_is_identity(const ModelSpec& model);

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst_margin = 0.0;  // positive margin = satisfied
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

/// Monte Carlo check of the dissipativity, growth, ellipticity, and Lipschitz
/// assumptions over random points with |x|,|h| <= sample_radius.
ValidationReport validate_assumptions(const ModelSpec& model, double sample_radius,
                                      int n_samples, std::uint64_t seed = 7);

}  // namespace rdmeta
