#pragma once

#include "pdmp/model.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <vector>

namespace testing {

using nlohmann::json;

// Constants that satisfy the balance inequality; test models that do not
// claim (A1)-(A5) reuse them.
inline json balanced_constants(double lambda = 1.0) {
  return {{"lambda", lambda}, {"L", 1.0}, {"alpha", -1.0}, {"L_bar", 1.0}, {"L_w", 0.125}, {"L_pi", 0.1},
          {"L_p", 0.1}, {"delta_pi", 0.5}, {"delta_p", 0.5}, {"r", 1.0}, {"c", 1.0}, {"y_bar", {0.0}}};
}

inline json base_config() {
  return {
      {"name", "test"},
      {"dim", 1},
      {"state_space", {{"lo", {-20.0}}, {"hi", {20.0}}}},
      {"flows", {{{"kind", "identity"}}}},
      {"jump_map", {{"kind", "affine"}, {"scale", 1.0}, {"theta_coef", {0.0}}, {"offset", {0.0}}}},
      {"parameter_space", {{"kind", "finite"}, {"atoms", {0.0}}}},
      {"jump_density", {{"kind", "categorical"}, {"weights", {1.0}}}},
      {"switching", {{"kind", "constant"}, {"matrix", {{1.0}}}}},
      {"noise", {{"kind", "none"}}},
      {"constants", balanced_constants()},
  };
}

// m = 1, S(t, y) = y, w(y) = y, nu = delta_0.
inline pdmp::ModelSpec identity_model(double lambda = 1.0) {
  auto cfg = base_config();
  cfg["constants"] = balanced_constants(lambda);
  return pdmp::model_from_json(cfg);
}

// S(t, y) = y e^{-t}, w(y) = y/2 + 1, nu = delta_0.
inline pdmp::ModelSpec deterministic_relaxation() {
  auto cfg = base_config();
  cfg["state_space"] = {{"lo", {0.0}}, {"hi", {12.0}}};
  cfg["flows"] = {{{"kind", "relaxation"}, {"target", {0.0}}, {"rate", 1.0}}};
  cfg["jump_map"] = {{"kind", "affine"}, {"scale", 0.5}, {"theta_coef", {0.0}}, {"offset", {1.0}}};
  return pdmp::model_from_json(cfg);
}

// w(y) = sqrt(y): not Lipschitz at 0, so (A3) must fail near the origin.
inline pdmp::ModelSpec sqrt_model() {
  auto cfg = base_config();
  cfg["name"] = "sqrt-map";
  cfg["state_space"] = {{"lo", {0.0}}, {"hi", {12.0}}};
  cfg["flows"] = {{{"kind", "relaxation"}, {"target", {0.0}}, {"rate", 1.0}}};
  cfg["jump_map"] = {{"kind", "sqrt"}, {"theta_coef", {0.0}}, {"offset", {0.0}}};
  cfg["parameter_space"] = {{"kind", "interval"}, {"lo", 0.0}, {"hi", 1.0}};
  cfg["jump_density"] = {{"kind", "uniform"}};
  return pdmp::model_from_json(cfg);
}

inline double sample_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_var(const std::vector<double>& xs) {
  const double m = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

}  // namespace testing
