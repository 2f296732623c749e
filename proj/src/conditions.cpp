#include "pdmp/conditions.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/quadrature.hpp"

#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace pdmp {

void ProbeSet::add(const Point& a, const Point& b, double time, int flow1, int flow2) {
  y1.push_back(a);
  y2.push_back(b);
  t.push_back(time);
  i1.push_back(flow1);
  i2.push_back(flow2);
}

ProbeSet make_probes(const ModelSpec& model, std::size_t n, double t_max) {
  if (t_max <= 0.0) t_max = 10.0 / model.lambda();
  const int d = model.dim;
  const auto dims = static_cast<std::size_t>(2 * d + 3);
  boost::random::sobol gen(dims);
  const double scale = static_cast<double>(gen.max() - gen.min()) + 1.0;
  auto next = [&] { return static_cast<double>(gen() - gen.min()) / scale; };
  const int m = model.num_flows();
  ProbeSet probes;
  for (std::size_t k = 0; k < n; ++k) {
    Point a(d), b(d);
    for (int c = 0; c < d; ++c) a(c) = model.box.lo(c) + next() * (model.box.hi(c) - model.box.lo(c));
    for (int c = 0; c < d; ++c) b(c) = model.box.lo(c) + next() * (model.box.hi(c) - model.box.lo(c));
    const double time = next() * t_max;
    const int f1 = std::min(m - 1, static_cast<int>(next() * m));
    const int f2 = std::min(m - 1, static_cast<int>(next() * m));
    probes.add(a, b, time, f1, f2);
  }
  return probes;
}

namespace {

using nlohmann::json;

json point_json(const Point& p) {
  json a = json::array();
  for (Eigen::Index k = 0; k < p.size(); ++k) a.push_back(p(k));
  return a;
}

json probe_json(const ProbeSet& probes, std::size_t k) {
  return {{"y1", point_json(probes.y1[k])}, {"y2", point_json(probes.y2[k])}, {"t", probes.t[k]},
          {"i1", probes.i1[k] + 1},        {"i2", probes.i2[k] + 1}};
}

// Integral over Theta w.r.t. its reference measure.
double theta_integral(const ModelSpec& model, const std::function<double(double)>& f, double tol) {
  const auto& th = model.theta_space;
  if (th.kind == ParameterSpace::Kind::Finite) {
    double s = 0.0;
    for (double a : th.atoms) s += f(a);
    return s;
  }
  return integrate(f, th.lo, th.hi, tol);
}

// Tracks rhs - lhs over probes, with a tolerance scaled by max(1, |rhs|).
class MarginTracker {
 public:
  MarginTracker(std::string name, double tol) { result_.name = std::move(name), tol_ = tol; }

  void observe(double lhs, double rhs, const json& probe) {
    const double margin = rhs - lhs;
    const double normalized = margin / std::max(1.0, std::abs(rhs));
    if (margin < result_.margin || first_) result_.margin = margin;
    if (normalized < worst_normalized_ || first_) {
      worst_normalized_ = normalized;
      result_.witness = probe;
      result_.witness["lhs"] = lhs;
      result_.witness["rhs"] = rhs;
    }
    if (normalized < -tol_) result_.pass = false;
    first_ = false;
  }

  ConditionResult finish() {
    result_.details["tolerance"] = tol_;
    result_.details["worst_normalized_margin"] = first_ ? 0.0 : worst_normalized_;
    return std::move(result_);
  }

 private:
  ConditionResult result_;
  double tol_ = 0.0;
  double worst_normalized_ = 0.0;
  bool first_ = true;
};

ConditionResult check_a1(const ModelSpec& model, const ProbeSet& probes, const ConditionOptions& opt) {
  const auto& k = model.constants;
  const double lambda = k.lambda;
  const double t_max = opt.a1_horizon / lambda;
  const double power = 2.0 + k.r;
  double sup = 0.0;
  json witness;
  const std::size_t n = std::min(opt.a1_probes, probes.size());
  for (std::size_t p = 0; p < n; ++p) {
    for (int i = 0; i < model.num_flows(); ++i) {
      const Point& y = probes.y1[p];
      auto inner = [&](double t) {
        const Point sy_bar = model.flow(i, t, k.y_bar);
        const Point sy = model.flow(i, t, y);
        const double integral = theta_integral(
            model,
            [&](double theta) {
              const double dist = (model.jump_map(theta, sy_bar) - k.y_bar).norm();
              return std::pow(dist, power) * model.jump_density(sy, theta);
            },
            opt.quad_tol);
        return std::exp(-lambda * t) * integral;
      };
      const double value = integrate(inner, 0.0, t_max, opt.quad_tol);
      if (value > sup || witness.is_null()) {
        sup = value;
        witness = {{"y", point_json(y)}, {"i", i + 1}, {"value", value}};
      }
    }
  }
  ConditionResult r;
  r.name = "A1";
  r.pass = std::isfinite(sup) && sup < opt.a1_cap;
  r.margin = opt.a1_cap - sup;
  r.witness = witness;
  r.details = {{"sup_estimate", sup},
               {"cap", opt.a1_cap},
               {"cap_is_artifact_choice", true},
               {"t_max", t_max},
               {"tail_factor_exp_minus_lambda_tmax", std::exp(-lambda * t_max)},
               {"probes_used", n}};
  return r;
}

ConditionResult check_a2(const ModelSpec& model, const ProbeSet& probes, const ConditionOptions& opt) {
  const auto& k = model.constants;
  MarginTracker tr("A2", opt.tol);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const double t = probes.t[p];
    const double lhs = (model.flow(probes.i1[p], t, probes.y1[p]) - model.flow(probes.i2[p], t, probes.y2[p])).norm();
    const double d = probes.i1[p] != probes.i2[p] ? 1.0 : 0.0;
    const double rhs = k.L * std::exp(k.alpha * t) * (probes.y1[p] - probes.y2[p]).norm() + t * k.L_bar * d;
    tr.observe(lhs, rhs, probe_json(probes, p));
  }
  return tr.finish();
}

ConditionResult check_a3(const ModelSpec& model, const ProbeSet& probes, const ConditionOptions& opt) {
  const auto& k = model.constants;
  const double power = 2.0 + k.r;
  MarginTracker tr("A3", opt.tol);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const Point& a = probes.y1[p];
    const Point& b = probes.y2[p];
    const double lhs = theta_integral(
        model,
        [&](double theta) {
          return model.jump_density(a, theta) * std::pow((model.jump_map(theta, a) - model.jump_map(theta, b)).norm(), power);
        },
        opt.quad_tol);
    const double rhs = k.L_w * std::pow((a - b).norm(), power);
    tr.observe(lhs, rhs, probe_json(probes, p));
  }
  return tr.finish();
}

ConditionResult check_a4(const ModelSpec& model, const ProbeSet& probes, const ConditionOptions& opt) {
  const auto& k = model.constants;
  const int m = model.num_flows();
  MarginTracker pi_tr("A4.switching", opt.tol);
  MarginTracker p_tr("A4.density", opt.tol);
  std::vector<double> r1(m), r2(m);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const Point& a = probes.y1[p];
    const Point& b = probes.y2[p];
    const double dist = (a - b).norm();
    for (int i = 0; i < m; ++i) {
      model.switching_row(i, a, r1.data());
      model.switching_row(i, b, r2.data());
      double lhs = 0.0;
      for (int j = 0; j < m; ++j) lhs += std::abs(r1[j] - r2[j]);
      json probe = probe_json(probes, p);
      probe["row"] = i + 1;
      pi_tr.observe(lhs, k.L_pi * dist, probe);
    }
    const double lhs = theta_integral(
        model, [&](double theta) { return std::abs(model.jump_density(a, theta) - model.jump_density(b, theta)); },
        opt.quad_tol);
    p_tr.observe(lhs, k.L_p * dist, probe_json(probes, p));
  }
  auto pi_res = pi_tr.finish();
  auto p_res = p_tr.finish();
  ConditionResult r;
  r.name = "A4";
  r.pass = pi_res.pass && p_res.pass;
  r.margin = std::min(pi_res.margin, p_res.margin);
  r.witness = pi_res.margin <= p_res.margin ? pi_res.witness : p_res.witness;
  r.details = {{"switching", {{"pass", pi_res.pass}, {"margin", pi_res.margin}, {"witness", pi_res.witness}}},
               {"density", {{"pass", p_res.pass}, {"margin", p_res.margin}, {"witness", p_res.witness}}}};
  return r;
}

// int over Theta(y1, y2) of min(p(y1, .), p(y2, .)), where Theta(y1, y2) keeps
// theta with |w_theta(y1) - w_theta(y2)| <= L_w^{1/(2+r)} |y1 - y2|.
double coupled_density_mass(const ModelSpec& model, const Point& a, const Point& b, double tol) {
  const auto& k = model.constants;
  const double threshold = std::pow(k.L_w, 1.0 / (2.0 + k.r)) * (a - b).norm();
  auto member = [&](double theta) {
    const double d = (model.jump_map(theta, a) - model.jump_map(theta, b)).norm();
    return d <= threshold * (1.0 + 1e-9) + 1e-14;
  };
  auto overlap = [&](double theta) { return std::min(model.jump_density(a, theta), model.jump_density(b, theta)); };
  const auto& th = model.theta_space;
  if (th.kind == ParameterSpace::Kind::Finite) {
    double s = 0.0;
    for (double atom : th.atoms)
      if (member(atom)) s += overlap(atom);
    return s;
  }
  constexpr int kGrid = 65;
  int members = 0;
  for (int g = 0; g < kGrid; ++g) members += member(th.lo + (th.hi - th.lo) * g / (kGrid - 1.0)) ? 1 : 0;
  if (members == 0) return 0.0;
  if (members == kGrid) return integrate(overlap, th.lo, th.hi, tol);
  // Mixed membership: composite midpoint rule on a fine grid.
  constexpr int kCells = 1 << 14;
  const double h = (th.hi - th.lo) / kCells;
  double s = 0.0;
  for (int c = 0; c < kCells; ++c) {
    const double theta = th.lo + (c + 0.5) * h;
    if (member(theta)) s += overlap(theta);
  }
  return s * h;
}

ConditionResult check_a5(const ModelSpec& model, const ProbeSet& probes, const ConditionOptions& opt) {
  const auto& k = model.constants;
  const int m = model.num_flows();
  MarginTracker pi_tr("A5.switching", opt.tol);
  MarginTracker p_tr("A5.density", opt.tol);
  std::vector<double> r1(m), r2(m);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const Point& a = probes.y1[p];
    const Point& b = probes.y2[p];
    model.switching_row(probes.i1[p], a, r1.data());
    model.switching_row(probes.i2[p], b, r2.data());
    double overlap = 0.0;
    for (int j = 0; j < m; ++j) overlap += std::min(r1[j], r2[j]);
    // rhs - lhs for a lower bound: the "lhs" here is delta, the "rhs" the overlap.
    pi_tr.observe(k.delta_pi, overlap, probe_json(probes, p));
    p_tr.observe(k.delta_p, coupled_density_mass(model, a, b, opt.quad_tol), probe_json(probes, p));
  }
  auto pi_res = pi_tr.finish();
  auto p_res = p_tr.finish();
  ConditionResult r;
  r.name = "A5";
  r.pass = pi_res.pass && p_res.pass;
  r.margin = std::min(pi_res.margin, p_res.margin);
  r.witness = pi_res.margin <= p_res.margin ? pi_res.witness : p_res.witness;
  r.details = {{"switching", {{"pass", pi_res.pass}, {"margin", pi_res.margin}, {"witness", pi_res.witness}}},
               {"density", {{"pass", p_res.pass}, {"margin", p_res.margin}, {"witness", p_res.witness}}},
               {"theta_set_threshold", "L_w^{1/(2+r)} |y1 - y2|"}};
  return r;
}

}  // namespace

bool ConditionReport::all_pass() const {
  return balance_pass && std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.pass; });
}

const ConditionResult& ConditionReport::get(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  fail(ErrorCode::PreconditionViolation, "no condition named " + name);
}

json ConditionReport::to_json() const {
  json out;
  out["balance"] = {{"lhs", balance_lhs}, {"pass", balance_pass}};
  out["probes"] = probes;
  out["all_pass"] = all_pass();
  out["caveat"] = "conditions are universally quantified; probes can falsify but not prove them";
  json conds = json::object();
  for (const auto& c : conditions)
    conds[c.name] = {{"pass", c.pass}, {"margin", c.margin}, {"witness", c.witness}, {"details", c.details}};
  out["conditions"] = conds;
  return out;
}

ConditionReport check_conditions(const ModelSpec& model, const ProbeSet& probes, const ConditionOptions& options) {
  require(probes.size() > 0, "check_conditions: probe set must be nonempty");
  ConditionReport report;
  report.probes = probes.size();
  report.balance_lhs = model.balance_lhs();
  report.balance_pass = report.balance_lhs < 1.0;
  report.conditions.push_back(check_a1(model, probes, options));
  report.conditions.push_back(check_a2(model, probes, options));
  report.conditions.push_back(check_a3(model, probes, options));
  report.conditions.push_back(check_a4(model, probes, options));
  report.conditions.push_back(check_a5(model, probes, options));
  return report;
}

}  // namespace pdmp
