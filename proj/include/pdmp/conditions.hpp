#pragma once

#include "pdmp/model.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace pdmp {

// Probe tuples (y1, y2, t, i1, i2) drawn over a bounding box of Y.
struct ProbeSet {
  std::vector<Point> y1;
  std::vector<Point> y2;
  std::vector<double> t;
  std::vector<int> i1;
  std::vector<int> i2;

  std::size_t size() const { return y1.size(); }
  void add(const Point& a, const Point& b, double time, int flow1, int flow2);
};

// Sobol points over box x box x [0, t_max] x I x I. t_max defaults to 10/lambda.
ProbeSet make_probes(const ModelSpec& model, std::size_t n, double t_max = 0.0);

struct ConditionOptions {
  // Tolerance for closed-form inequalities, scaled by max(1, |rhs|).
  double tol = 1e-8;
  // Relative tolerance of the nested quadratures.
  double quad_tol = 1e-9;
  // (A1) only asserts finiteness; values above this cap count as failure.
  double a1_cap = 1e6;
  // Integration horizon for (A1) is t_max = a1_horizon / lambda.
  double a1_horizon = 40.0;
  // (A1) is a nested quadrature; it is evaluated on this many probes.
  std::size_t a1_probes = 64;
};

struct ConditionResult {
  std::string name;
  bool pass = true;
  // Worst-case rhs - lhs over the probes (negative means violated).
  double margin = 0.0;
  nlohmann::json witness;  // probe attaining the worst normalized margin
  nlohmann::json details;
};

struct ConditionReport {
  std::vector<ConditionResult> conditions;
  double balance_lhs = 0.0;
  bool balance_pass = false;
  std::size_t probes = 0;

  bool all_pass() const;
  const ConditionResult& get(const std::string& name) const;
  nlohmann::json to_json() const;
};

// Spot-checks (A1)-(A5) on the probe set. Universally quantified conditions
// can only be falsified this way, never proven.
ConditionReport check_conditions(const ModelSpec& model, const ProbeSet& probes, const ConditionOptions& options = {});

}  // namespace pdmp
