#include "pdmp/model.hpp"

#include "pdmp/digest.hpp"
#include "pdmp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace pdmp {

Point FlowSpec::apply(double t, const Point& y) const {
  if (rate == 0.0 || t == 0.0) return y;
  return target + (y - target) * std::exp(-rate * t);
}

Point JumpMapSpec::apply(double theta, const Point& y) const {
  if (kind == Kind::Affine) return scale * y + theta * theta_coef + offset;
  Point out(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) out(k) = std::sqrt(std::max(y(k), 0.0));
  return scale * out + theta * theta_coef + offset;
}

double ParameterSpace::measure() const {
  return kind == Kind::Interval ? hi - lo : static_cast<double>(atoms.size());
}

bool ParameterSpace::contains(double theta) const {
  if (kind == Kind::Interval) return theta >= lo && theta <= hi;
  return std::find(atoms.begin(), atoms.end(), theta) != atoms.end();
}

bool StateBox::contains(const Point& y, double slack) const {
  return (y.array() >= lo.array() - slack).all() && (y.array() <= hi.array() + slack).all();
}

double ModelSpec::jump_density(const Point& y, double theta) const {
  switch (density.kind) {
    case JumpDensitySpec::Kind::Uniform:
      return theta_space.contains(theta) ? 1.0 / theta_space.measure() : 0.0;
    case JumpDensitySpec::Kind::Beta: {
      if (!theta_space.contains(theta)) return 0.0;
      const double width = theta_space.hi - theta_space.lo;
      const double u = (theta - theta_space.lo) / width;
      const double a = density.beta_a, b = density.beta_b;
      const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
      if ((u <= 0.0 && a < 1.0) || (u >= 1.0 && b < 1.0)) return 0.0;
      const double log_u = u > 0.0 ? std::log(u) : -INFINITY;
      const double log_v = u < 1.0 ? std::log1p(-u) : -INFINITY;
      const double lp = (a - 1.0) * (a == 1.0 ? 0.0 : log_u) +
                        (b - 1.0) * (b == 1.0 ? 0.0 : log_v) - log_beta;
      return std::exp(lp) / width;
    }
    case JumpDensitySpec::Kind::Categorical: {
      const auto it = std::find(theta_space.atoms.begin(), theta_space.atoms.end(), theta);
      if (it == theta_space.atoms.end()) return 0.0;
      return density.weights[static_cast<std::size_t>(it - theta_space.atoms.begin())];
    }
    case JumpDensitySpec::Kind::LinearTilt: {
      if (!theta_space.contains(theta)) return 0.0;
      const double width = theta_space.hi - theta_space.lo;
      const double u = (theta - theta_space.lo) / width;
      const double s = density.kappa * std::tanh(density.slope * (y(0) - density.center));
      return (1.0 + s * (2.0 * u - 1.0)) / width;
    }
  }
  return 0.0;
}

void ModelSpec::switching_row(int i, const Point& y, double* out) const {
  const int m = num_flows();
  if (switching.kind == SwitchingSpec::Kind::Constant) {
    std::copy(switching.matrix[i].begin(), switching.matrix[i].end(), out);
    return;
  }
  const double to_second =
      switching.lo + (switching.hi - switching.lo) / (1.0 + std::exp(switching.slope * (y(0) - switching.mid)));
  out[0] = 1.0 - to_second;
  out[1] = to_second;
  (void)m;
}

double ModelSpec::switching_prob(int i, int j, const Point& y) const {
  double row[kMaxDim];
  std::vector<double> big;
  double* out = row;
  if (num_flows() > kMaxDim) {
    big.resize(num_flows());
    out = big.data();
  }
  switching_row(i, y, out);
  return out[j];
}

double ModelSpec::density_cap() const {
  if (density.density_cap > 0.0) return density.density_cap;
  switch (density.kind) {
    case JumpDensitySpec::Kind::Uniform: return 1.0 / theta_space.measure();
    case JumpDensitySpec::Kind::LinearTilt:
      return (1.0 + std::abs(density.kappa)) / (theta_space.hi - theta_space.lo);
    case JumpDensitySpec::Kind::Categorical:
      return *std::max_element(density.weights.begin(), density.weights.end());
    case JumpDensitySpec::Kind::Beta: return INFINITY;
  }
  return INFINITY;
}

double ModelSpec::balance_lhs() const {
  const auto& k = constants;
  return std::pow(k.L, 2.0 + k.r) * k.L_w + (2.0 + k.r) * k.alpha / k.lambda;
}

namespace {

void check_row(const std::vector<double>& row, const std::string& where) {
  const double sum = std::accumulate(row.begin(), row.end(), 0.0);
  const bool in_range = std::all_of(row.begin(), row.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
  if (!in_range || std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "switching row " << where << " sums to " << sum << " (entries must lie in [0,1] and sum to 1)";
    fail(ErrorCode::InvalidRowSum, msg.str());
  }
}

}  // namespace

ModelSpec build_model(ModelSpec m) {
  auto invalid = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
  if (m.dim < 1 || m.dim > kMaxDim) invalid("dim must lie in [1, 16]");
  if (m.flows.empty()) invalid("at least one flow is required");
  if (m.box.lo.size() != m.dim || m.box.hi.size() != m.dim) invalid("state box dimension mismatch");
  if ((m.box.lo.array() > m.box.hi.array()).any()) invalid("state box has lo > hi");
  for (const auto& f : m.flows) {
    if (f.target.size() != m.dim) invalid("flow target dimension mismatch");
    if (!(f.rate >= 0.0)) invalid("flow rate must be >= 0");
  }
  if (m.jump.theta_coef.size() != m.dim || m.jump.offset.size() != m.dim) invalid("jump map dimension mismatch");
  if (m.constants.y_bar.size() != m.dim) invalid("y_bar dimension mismatch");

  const auto& k = m.constants;
  if (!(k.lambda > 0.0)) invalid("lambda must be > 0");
  if (!(k.L > 0 && k.L_bar > 0 && k.L_w > 0 && k.L_pi > 0 && k.L_p > 0)) invalid("Lipschitz constants must be > 0");
  if (!(k.delta_pi > 0 && k.delta_p > 0)) invalid("delta_pi and delta_p must be > 0");
  if (!(k.r > 0.0 && k.r < 2.0)) invalid("r must lie in (0, 2)");
  if (!(k.c >= 1.0)) invalid("metric weight c must be >= 1");

  auto& th = m.theta_space;
  if (th.kind == ParameterSpace::Kind::Interval && !(th.hi > th.lo)) invalid("Theta interval must have hi > lo");
  if (th.kind == ParameterSpace::Kind::Finite && th.atoms.empty()) invalid("finite Theta needs atoms");

  auto& d = m.density;
  switch (d.kind) {
    case JumpDensitySpec::Kind::Categorical: {
      if (th.kind != ParameterSpace::Kind::Finite) invalid("categorical density needs a finite Theta");
      if (d.weights.empty()) d.weights.assign(th.atoms.size(), 1.0 / static_cast<double>(th.atoms.size()));
      if (d.weights.size() != th.atoms.size()) invalid("categorical weights/atoms size mismatch");
      const double s = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
      if (std::abs(s - 1.0) > 1e-12) invalid("categorical weights must sum to 1");
      break;
    }
    case JumpDensitySpec::Kind::Beta:
      if (th.kind != ParameterSpace::Kind::Interval) invalid("beta density needs an interval Theta");
      if (!(d.beta_a > 0 && d.beta_b > 0)) invalid("beta parameters must be > 0");
      break;
    case JumpDensitySpec::Kind::LinearTilt:
      if (th.kind != ParameterSpace::Kind::Interval) invalid("linear-tilt density needs an interval Theta");
      if (!(std::abs(d.kappa) < 1.0)) invalid("linear-tilt kappa must satisfy |kappa| < 1");
      if (d.density_cap > 0.0 && d.density_cap < (1.0 + std::abs(d.kappa)) / (th.hi - th.lo))
        invalid("declared density cap is below the density maximum");
      break;
    case JumpDensitySpec::Kind::Uniform: break;
  }

  const int mflows = m.num_flows();
  auto& sw = m.switching;
  if (sw.kind == SwitchingSpec::Kind::Constant) {
    if (static_cast<int>(sw.matrix.size()) != mflows) invalid("switching matrix must be m x m");
    for (int i = 0; i < mflows; ++i) {
      if (static_cast<int>(sw.matrix[i].size()) != mflows) invalid("switching matrix must be m x m");
      check_row(sw.matrix[i], std::to_string(i + 1));
    }
  } else {
    if (mflows != 2) invalid("logistic switching needs exactly two flows");
    check_row({1.0 - sw.lo, sw.lo}, "logistic(lo)");
    check_row({1.0 - sw.hi, sw.hi}, "logistic(hi)");
  }

  auto& nz = m.noise;
  switch (nz.kind) {
    case NoiseSpec::Kind::None: nz.epsilon = 0.0; break;
    case NoiseSpec::Kind::UniformBall:
      if (!(nz.epsilon > 0.0)) invalid("uniform-ball noise needs epsilon > 0");
      break;
    case NoiseSpec::Kind::TruncatedGaussian:
      if (!(nz.sigma > 0.0 && nz.epsilon > 0.0)) invalid("truncated-gaussian noise needs sigma, epsilon > 0");
      if (nz.truncation <= 0.0) nz.truncation = nz.epsilon;
      if (nz.truncation > nz.epsilon)
        fail(ErrorCode::NoiseSupportTooLarge, "noise truncation radius exceeds the declared support radius epsilon");
      break;
  }
  const double half_width = 0.5 * (m.box.hi - m.box.lo).minCoeff();
  if (nz.epsilon > half_width)
    fail(ErrorCode::NoiseSupportTooLarge, "noise support radius exceeds half the width of the state box");

  const double lhs = m.balance_lhs();
  if (!(lhs < 1.0)) {
    std::ostringstream msg;
    msg << "balance condition violated: L^{2+r} L_w + (2+r) alpha/lambda = " << lhs << " >= 1";
    fail(ErrorCode::BalanceViolation, msg.str());
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON config

namespace {

using nlohmann::json;

Point point_from(const json& j, int dim, const char* what) {
  Point p(dim);
  if (j.is_number()) {
    p.setConstant(j.get<double>());
    return p;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    fail(ErrorCode::InvalidConfig, std::string(what) + ": expected a number or an array of length dim");
  for (int k = 0; k < dim; ++k) p(k) = j[k].get<double>();
  return p;
}

json point_to(const Point& p) {
  json a = json::array();
  for (Eigen::Index k = 0; k < p.size(); ++k) a.push_back(p(k));
  return a;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

const json& need(const json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::InvalidConfig, std::string("missing config field '") + key + "'");
  return j.at(key);
}

}  // namespace

ModelSpec model_from_json(const json& cfg) {
  try {
    ModelSpec m;
    m.name = get_or<std::string>(cfg, "name", "custom");
    m.dim = get_or<int>(cfg, "dim", 1);
    if (m.dim < 1 || m.dim > kMaxDim) fail(ErrorCode::InvalidConfig, "dim must lie in [1, 16]");

    const auto& box = need(cfg, "state_space");
    m.box.lo = point_from(need(box, "lo"), m.dim, "state_space.lo");
    m.box.hi = point_from(need(box, "hi"), m.dim, "state_space.hi");

    for (const auto& f : need(cfg, "flows")) {
      const auto kind = get_or<std::string>(f, "kind", "relaxation");
      FlowSpec spec;
      if (kind == "identity") {
        spec.target = Point::Zero(m.dim);
        spec.rate = 0.0;
      } else if (kind == "relaxation") {
        spec.target = point_from(get_or<json>(f, "target", json(0.0)), m.dim, "flow.target");
        spec.rate = get_or<double>(f, "rate", 1.0);
      } else {
        fail(ErrorCode::InvalidConfig, "unknown flow kind '" + kind + "'");
      }
      m.flows.push_back(spec);
    }

    const auto& jm = need(cfg, "jump_map");
    const auto jkind = get_or<std::string>(jm, "kind", "affine");
    if (jkind == "affine") m.jump.kind = JumpMapSpec::Kind::Affine;
    else if (jkind == "sqrt") m.jump.kind = JumpMapSpec::Kind::Sqrt;
    else fail(ErrorCode::InvalidConfig, "unknown jump_map kind '" + jkind + "'");
    m.jump.scale = get_or<double>(jm, "scale", 1.0);
    m.jump.theta_coef = point_from(get_or<json>(jm, "theta_coef", json(0.0)), m.dim, "jump_map.theta_coef");
    m.jump.offset = point_from(get_or<json>(jm, "offset", json(0.0)), m.dim, "jump_map.offset");

    const auto& ps = need(cfg, "parameter_space");
    const auto pkind = get_or<std::string>(ps, "kind", "interval");
    if (pkind == "interval") {
      m.theta_space.kind = ParameterSpace::Kind::Interval;
      m.theta_space.lo = get_or<double>(ps, "lo", 0.0);
      m.theta_space.hi = get_or<double>(ps, "hi", 1.0);
    } else if (pkind == "finite") {
      m.theta_space.kind = ParameterSpace::Kind::Finite;
      m.theta_space.atoms = need(ps, "atoms").get<std::vector<double>>();
    } else {
      fail(ErrorCode::InvalidConfig, "unknown parameter_space kind '" + pkind + "'");
    }

    const auto& dn = need(cfg, "jump_density");
    const auto dkind = get_or<std::string>(dn, "kind", "uniform");
    if (dkind == "uniform") {
      m.density.kind = JumpDensitySpec::Kind::Uniform;
    } else if (dkind == "beta") {
      m.density.kind = JumpDensitySpec::Kind::Beta;
      m.density.beta_a = need(dn, "a").get<double>();
      m.density.beta_b = need(dn, "b").get<double>();
    } else if (dkind == "categorical" || dkind == "point-mass") {
      m.density.kind = JumpDensitySpec::Kind::Categorical;
      m.density.weights = get_or<std::vector<double>>(dn, "weights", {});
    } else if (dkind == "linear-tilt") {
      m.density.kind = JumpDensitySpec::Kind::LinearTilt;
      m.density.kappa = need(dn, "kappa").get<double>();
      m.density.slope = get_or<double>(dn, "slope", 1.0);
      m.density.center = get_or<double>(dn, "center", 0.0);
    } else {
      fail(ErrorCode::InvalidConfig, "unknown jump_density kind '" + dkind + "'");
    }
    m.density.density_cap = get_or<double>(dn, "density_cap", 0.0);

    const auto& sw = need(cfg, "switching");
    const auto skind = get_or<std::string>(sw, "kind", "constant");
    if (skind == "constant") {
      m.switching.kind = SwitchingSpec::Kind::Constant;
      m.switching.matrix = need(sw, "matrix").get<std::vector<std::vector<double>>>();
    } else if (skind == "logistic") {
      m.switching.kind = SwitchingSpec::Kind::Logistic;
      m.switching.lo = need(sw, "lo").get<double>();
      m.switching.hi = need(sw, "hi").get<double>();
      m.switching.slope = get_or<double>(sw, "slope", 1.0);
      m.switching.mid = get_or<double>(sw, "mid", 0.0);
    } else {
      fail(ErrorCode::InvalidConfig, "unknown switching kind '" + skind + "'");
    }

    const auto nz = get_or<json>(cfg, "noise", json{{"kind", "none"}});
    const auto nkind = get_or<std::string>(nz, "kind", "none");
    if (nkind == "none") {
      m.noise.kind = NoiseSpec::Kind::None;
    } else if (nkind == "uniform-ball") {
      m.noise.kind = NoiseSpec::Kind::UniformBall;
      m.noise.epsilon = need(nz, "epsilon").get<double>();
    } else if (nkind == "truncated-gaussian") {
      m.noise.kind = NoiseSpec::Kind::TruncatedGaussian;
      m.noise.epsilon = need(nz, "epsilon").get<double>();
      m.noise.sigma = need(nz, "sigma").get<double>();
      m.noise.truncation = get_or<double>(nz, "truncation", 0.0);
    } else {
      fail(ErrorCode::InvalidConfig, "unknown noise kind '" + nkind + "'");
    }

    const auto& k = need(cfg, "constants");
    m.constants.lambda = need(k, "lambda").get<double>();
    m.constants.L = need(k, "L").get<double>();
    m.constants.alpha = need(k, "alpha").get<double>();
    m.constants.L_bar = need(k, "L_bar").get<double>();
    m.constants.L_w = need(k, "L_w").get<double>();
    m.constants.L_pi = need(k, "L_pi").get<double>();
    m.constants.L_p = need(k, "L_p").get<double>();
    m.constants.delta_pi = need(k, "delta_pi").get<double>();
    m.constants.delta_p = need(k, "delta_p").get<double>();
    m.constants.r = need(k, "r").get<double>();
    m.constants.c = get_or<double>(k, "c", 1.0);
    m.constants.y_bar = point_from(get_or<json>(k, "y_bar", json(0.0)), m.dim, "constants.y_bar");

    return build_model(std::move(m));
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("malformed model config: ") + e.what());
  }
}

json model_to_json(const ModelSpec& m) {
  json j;
  j["name"] = m.name;
  j["dim"] = m.dim;
  j["state_space"] = {{"lo", point_to(m.box.lo)}, {"hi", point_to(m.box.hi)}};
  j["flows"] = json::array();
  for (const auto& f : m.flows) {
    if (f.rate == 0.0) j["flows"].push_back({{"kind", "identity"}});
    else j["flows"].push_back({{"kind", "relaxation"}, {"target", point_to(f.target)}, {"rate", f.rate}});
  }
  j["jump_map"] = {{"kind", m.jump.kind == JumpMapSpec::Kind::Affine ? "affine" : "sqrt"},
                   {"scale", m.jump.scale},
                   {"theta_coef", point_to(m.jump.theta_coef)},
                   {"offset", point_to(m.jump.offset)}};
  if (m.theta_space.kind == ParameterSpace::Kind::Interval)
    j["parameter_space"] = {{"kind", "interval"}, {"lo", m.theta_space.lo}, {"hi", m.theta_space.hi}};
  else
    j["parameter_space"] = {{"kind", "finite"}, {"atoms", m.theta_space.atoms}};
  json d;
  switch (m.density.kind) {
    case JumpDensitySpec::Kind::Uniform: d = {{"kind", "uniform"}}; break;
    case JumpDensitySpec::Kind::Beta: d = {{"kind", "beta"}, {"a", m.density.beta_a}, {"b", m.density.beta_b}}; break;
    case JumpDensitySpec::Kind::Categorical: d = {{"kind", "categorical"}, {"weights", m.density.weights}}; break;
    case JumpDensitySpec::Kind::LinearTilt:
      d = {{"kind", "linear-tilt"}, {"kappa", m.density.kappa}, {"slope", m.density.slope}, {"center", m.density.center}};
      break;
  }
  if (m.density.density_cap > 0.0) d["density_cap"] = m.density.density_cap;
  j["jump_density"] = d;
  if (m.switching.kind == SwitchingSpec::Kind::Constant)
    j["switching"] = {{"kind", "constant"}, {"matrix", m.switching.matrix}};
  else
    j["switching"] = {{"kind", "logistic"}, {"lo", m.switching.lo}, {"hi", m.switching.hi},
                      {"slope", m.switching.slope}, {"mid", m.switching.mid}};
  switch (m.noise.kind) {
    case NoiseSpec::Kind::None: j["noise"] = {{"kind", "none"}}; break;
    case NoiseSpec::Kind::UniformBall: j["noise"] = {{"kind", "uniform-ball"}, {"epsilon", m.noise.epsilon}}; break;
    case NoiseSpec::Kind::TruncatedGaussian:
      j["noise"] = {{"kind", "truncated-gaussian"}, {"epsilon", m.noise.epsilon},
                    {"sigma", m.noise.sigma}, {"truncation", m.noise.truncation}};
      break;
  }
  const auto& k = m.constants;
  j["constants"] = {{"lambda", k.lambda}, {"L", k.L},         {"alpha", k.alpha},       {"L_bar", k.L_bar},
                    {"L_w", k.L_w},       {"L_pi", k.L_pi},   {"L_p", k.L_p},           {"delta_pi", k.delta_pi},
                    {"delta_p", k.delta_p}, {"r", k.r},       {"c", k.c},               {"y_bar", point_to(k.y_bar)}};
  return j;
}

ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidConfig, "cannot open model config '" + path + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, "cannot parse model config '" + path + "': " + e.what());
  }
  return model_from_json(cfg);
}

std::string model_hash(const ModelSpec& model) { return sha256_hex(model_to_json(model).dump()); }

}  // namespace pdmp
