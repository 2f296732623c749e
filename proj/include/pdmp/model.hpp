#pragma once

#include "pdmp/state.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace pdmp {

// S(t, y) = target + (y - target) e^{-rate t}. rate = 0 gives the identity
// semiflow.
struct FlowSpec {
  Point target;
  double rate = 1.0;

  Point apply(double t, const Point& y) const;
};

// Jump map w_theta(y). Affine: scale*y + theta*theta_coef + offset.
// Sqrt: sqrt(y) componentwise (clamped at 0) + theta*theta_coef + offset; it is
// not Lipschitz at 0 and exists to exercise the condition checker.
struct JumpMapSpec {
  enum class Kind { Affine, Sqrt };
  Kind kind = Kind::Affine;
  double scale = 1.0;
  Point theta_coef;
  Point offset;

  Point apply(double theta, const Point& y) const;
};

// Theta with its reference measure: Lebesgue on [lo, hi] or counting measure
// on a finite set of atoms.
struct ParameterSpace {
  enum class Kind { Interval, Finite };
  Kind kind = Kind::Interval;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> atoms;

  double measure() const;
  bool contains(double theta) const;
};

// theta -> p(y, theta), a density w.r.t. the reference measure of Theta.
//   Uniform:    1 / measure(Theta)
//   Beta:       Beta(a, b) on an interval, rescaled
//   Categorical: fixed weights over the finite atoms
//   LinearTilt: (1 + kappa tanh(slope (y0 - center)) (2u - 1)) / (hi - lo),
//               u = (theta - lo) / (hi - lo); sampled by rejection.
struct JumpDensitySpec {
  enum class Kind { Uniform, Beta, Categorical, LinearTilt };
  Kind kind = Kind::Uniform;
  double beta_a = 1.0;
  double beta_b = 1.0;
  std::vector<double> weights;
  double kappa = 0.0;
  double slope = 1.0;
  double center = 0.0;
  // Upper bound on p used as the rejection envelope; 0 means "derive it".
  double density_cap = 0.0;
};

// pi_ij(y).
//   Constant: fixed row-stochastic matrix.
//   Logistic (m = 2): pi_{i,2}(y) = lo + (hi - lo) / (1 + exp(slope (y0 - mid))),
//                     pi_{i,1} = 1 - pi_{i,2}, for every row i.
struct SwitchingSpec {
  enum class Kind { Constant, Logistic };
  Kind kind = Kind::Constant;
  std::vector<std::vector<double>> matrix;
  double lo = 0.5;
  double hi = 0.5;
  double slope = 1.0;
  double mid = 0.0;
};

// nu^eps, supported on the open ball B(0, epsilon).
struct NoiseSpec {
  enum class Kind { None, UniformBall, TruncatedGaussian };
  Kind kind = Kind::None;
  double epsilon = 0.0;
  double sigma = 0.0;
  double truncation = 0.0;
};

struct ModelConstants {
  double lambda = 1.0;
  double L = 1.0;
  double alpha = -1.0;
  double L_bar = 1.0;
  double L_w = 0.5;
  double L_pi = 1.0;
  double L_p = 1.0;
  double delta_pi = 0.5;
  double delta_p = 0.5;
  double r = 1.0;
  double c = 1.0;
  Point y_bar;
};

// Closed box containing Y; membership is the runtime containment check.
struct StateBox {
  Point lo;
  Point hi;

  bool contains(const Point& y, double slack = 0.0) const;
};

// Complete description of one model instance. Immutable once built and safe
// to share between threads.
class ModelSpec {
 public:
  std::string name;
  int dim = 1;
  StateBox box;
  std::vector<FlowSpec> flows;
  JumpMapSpec jump;
  ParameterSpace theta_space;
  JumpDensitySpec density;
  SwitchingSpec switching;
  NoiseSpec noise;
  ModelConstants constants;

  int num_flows() const { return static_cast<int>(flows.size()); }
  double lambda() const { return constants.lambda; }

  Point flow(int i, double t, const Point& y) const { return flows[i].apply(t, y); }
  Point jump_map(double theta, const Point& y) const { return jump.apply(theta, y); }
  double jump_density(const Point& y, double theta) const;
  // Row pi_i.(y); writes num_flows() entries.
  void switching_row(int i, const Point& y, double* out) const;
  double switching_prob(int i, int j, const Point& y) const;

  // Rejection envelope for the density sampler.
  double density_cap() const;
  double balance_lhs() const;
};

// Validates and freezes a model: row sums, noise support, balance
// inequality L^{2+r} L_w + (2+r) alpha / lambda < 1.
ModelSpec build_model(ModelSpec draft);

ModelSpec model_from_json(const nlohmann::json& config);
nlohmann::json model_to_json(const ModelSpec& model);
ModelSpec load_model_file(const std::string& path);

// SHA-256 of the canonical JSON form.
std::string model_hash(const ModelSpec& model);

}  // namespace pdmp
