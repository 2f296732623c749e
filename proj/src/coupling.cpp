#include "pdmp/coupling.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/operators.hpp"
#include "pdmp/parallel.hpp"
#include "pdmp/sampler.hpp"
#include "pdmp/simulate.hpp"
#include "pdmp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace pdmp {

namespace {

using nlohmann::json;

constexpr long kResidualAttempts = 2'000'000;

void check_inside(const ModelSpec& model, const Point& z) {
  if (!model.box.contains(z)) {
    std::ostringstream msg;
    msg << "coupled jump image left Y: y'' = " << z.transpose();
    fail(ErrorCode::StateEscapedY, msg.str());
  }
}

json point_json(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

}  // namespace

CoupledState coupled_step(const ModelSpec& model, const CoupledState& s, SeedStream& stream) {
  const double t = draw_interjump(stream, model.lambda());
  const Point h = draw_noise(stream, model);
  const int i1 = s.x1.flow, i2 = s.x2.flow;
  const Point y1 = model.flow(i1, t, s.x1.y);
  const Point y2 = model.flow(i2, t, s.x2.y);

  // Component 1 draws its full move; the coupled move accepts it for both.
  const double theta = draw_theta(stream, model, y1);
  const Point z1 = model.jump_map(theta, y1) + h;
  const Point z1_for_2 = model.jump_map(theta, y2) + h;
  const int j = draw_switch(stream, model, i1, z1);
  const double p1 = model.jump_density(y1, theta), p2 = model.jump_density(y2, theta);
  const double u_theta = stream.uniform(), u_switch = stream.uniform();
  bool coupled = u_theta * p1 < p2;
  if (coupled) {
    const double pi1 = model.switching_prob(i1, j, z1), pi2 = model.switching_prob(i2, j, z1_for_2);
    coupled = u_switch * pi1 < pi2;
  }

  CoupledState next;
  next.dtau = t;
  check_inside(model, z1);
  next.x1 = {z1, j};
  if (coupled) {
    check_inside(model, z1_for_2);
    next.x2 = {z1_for_2, j};
    next.zeta = 1;
    return next;
  }
  // Residual for component 2: draw from its own Pi-move and keep the draw with
  // probability 1 - q/f2, where q is the coupled density at that draw.
  for (long attempt = 0; attempt < kResidualAttempts; ++attempt) {
    const double th = draw_theta(stream, model, y2);
    const Point z2 = model.jump_map(th, y2) + h;
    const int j2 = draw_switch(stream, model, i2, z2);
    const Point z1_alt = model.jump_map(th, y1) + h;
    const double q2 = model.jump_density(y2, th), q1 = model.jump_density(y1, th);
    const double r2 = model.switching_prob(i2, j2, z2), r1 = model.switching_prob(i1, j2, z1_alt);
    const double ratio = std::min(1.0, q1 / q2) * std::min(1.0, r1 / r2);
    if (stream.uniform() >= ratio) {
      check_inside(model, z2);
      next.x2 = {z2, j2};
      next.zeta = 0;
      return next;
    }
  }
  fail(ErrorCode::RejectionStall, "residual coupling sampler acceptance rate below 5e-7");
}

double CouplingSetF::lyapunov_sum(const HybridState& x1, const HybridState& x2) const {
  return lyapunov(x1, y_bar) + lyapunov(x2, y_bar);
}

bool CouplingSetF::contains(const HybridState& x1, const HybridState& x2) const {
  return x1.flow == x2.flow || lyapunov_sum(x1, x2) < threshold();
}

bool CouplingSetF::hit(const HybridState& x1, const HybridState& x2) const {
  return contains(x1, x2) && lyapunov_sum(x1, x2) < threshold();
}

CoupledPath::CoupledPath(const HybridState& x1, const HybridState& x2, double c) : c_(c) {
  states_.push_back({x1, x2, 0.0, -1});
  dist_.push_back(rho_c(x1, x2, c));
}

void CoupledPath::push(const CoupledState& s) {
  states_.push_back(s);
  dist_.push_back(rho_c(s.x1, s.x2, c_));
}

std::optional<std::size_t> CoupledPath::hitting_time(const CouplingSetF& F, std::size_t N) const {
  for (std::size_t n = std::max<std::size_t>(N, 1); n < states_.size(); ++n)
    if (F.hit(states_[n].x1, states_[n].x2)) return n;
  return std::nullopt;
}

std::size_t CoupledPath::tau_hat() const {
  for (std::size_t n = states_.size(); n-- > 1;)
    if (states_[n].zeta == 0) return n + 1;
  return 0;
}

double CoupledPath::coupled_fraction() const {
  if (steps() == 0) return 0.0;
  std::size_t ones = 0;
  for (std::size_t n = 1; n < states_.size(); ++n) ones += states_[n].zeta == 1 ? 1 : 0;
  return static_cast<double>(ones) / static_cast<double>(steps());
}

void CoupledPath::write_jsonl(std::ostream& out) const {
  for (std::size_t n = 0; n < states_.size(); ++n) {
    const auto& s = states_[n];
    json rec = {{"n", n},           {"y1", point_json(s.x1.y)}, {"i1", s.x1.flow + 1}, {"y2", point_json(s.x2.y)},
                {"i2", s.x2.flow + 1}, {"dtau", s.dtau},        {"zeta", s.zeta},      {"dist", dist_[n]}};
    if (s.zeta < 0) rec["zeta"] = nullptr;
    out << rec.dump() << '\n';
  }
}

CoupledPath simulate_coupled(const ModelSpec& model, const HybridState& x1, const HybridState& x2, std::size_t n,
                             SeedStream& stream) {
  require(n >= 1, "simulate_coupled: n must be >= 1");
  CoupledPath path(x1, x2, model.constants.c);
  CoupledState s = path.state(0);
  for (std::size_t k = 0; k < n; ++k) {
    s = coupled_step(model, s, stream);
    path.push(s);
  }
  return path;
}

json DistanceDecay::to_json() const {
  return {{"mean", mean}, {"se", se}, {"fit", {{"q", q}, {"r2", r2}, {"points", fit_points}}}};
}

namespace {

// Log-linear fit over the leading run of points above rel_floor * y[0].
GeometricFit fit_leading_run(const std::vector<double>& y, double rel_floor, std::size_t first = 0) {
  std::vector<double> ns, ys;
  const double floor = rel_floor * y[first];
  for (std::size_t n = first; n < y.size() && y[n] > floor && y[n] > 0.0; ++n) {
    ns.push_back(static_cast<double>(n));
    ys.push_back(y[n]);
  }
  if (ns.size() < 3) return {};
  return fit_geometric(ns, ys);
}

}  // namespace

DistanceDecay coupled_distance_decay(const ModelSpec& model, const HybridState& x1, const HybridState& x2,
                                     std::size_t n_steps, std::size_t n_paths, std::uint64_t seed,
                                     double rel_floor) {
  require(n_paths >= 2, "coupled_distance_decay: need at least two paths");
  std::vector<std::vector<double>> dist(n_paths);
  parallel_for(n_paths, [&](std::size_t k) {
    SeedStream stream(seed, k);
    dist[k] = simulate_coupled(model, x1, x2, n_steps, stream).distances();
  });
  DistanceDecay out;
  for (std::size_t n = 0; n <= n_steps; ++n) {
    std::vector<double> col(n_paths);
    for (std::size_t k = 0; k < n_paths; ++k) col[k] = dist[k][n];
    const auto ms = mean_se(col);
    out.mean.push_back(ms.mean);
    out.se.push_back(ms.se);
  }
  if (out.mean[0] > 0.0) {
    const auto fit = fit_leading_run(out.mean, rel_floor);
    out.q = fit.rate;
    out.r2 = fit.r2;
    out.fit_points = fit.points;
  }
  return out;
}

std::vector<BProbe> make_b_probes(const ModelSpec& model, std::size_t n, SeedStream& stream) {
  std::vector<BProbe> probes;
  const int m = model.num_flows();
  auto draw_state = [&] {
    HybridState x;
    x.y = Point(model.dim);
    for (int c = 0; c < model.dim; ++c) x.y(c) = model.box.lo(c) + stream.uniform() * (model.box.hi(c) - model.box.lo(c));
    x.flow = std::min(m - 1, static_cast<int>(stream.uniform() * m));
    return x;
  };
  for (std::size_t k = 0; k < n; ++k) {
    BProbe p{draw_state(), draw_state()};
    // Every third probe is a near pair with equal indices, where (B2)-(B4) bite.
    if (k % 3 == 0) {
      p.x2 = p.x1;
      for (int c = 0; c < model.dim; ++c) {
        const double span = model.box.hi(c) - model.box.lo(c);
        p.x2.y(c) = std::clamp(p.x1.y(c) + 0.05 * span * (stream.uniform() - 0.5), model.box.lo(c), model.box.hi(c));
      }
    }
    probes.push_back(p);
  }
  return probes;
}

json check_B_conditions(const ModelSpec& model, const std::vector<BProbe>& probes, const BConditionOptions& options,
                        SeedStream& stream) {
  if (probes.empty() || options.mc_per_probe < 2)
    fail(ErrorCode::InsufficientSamples, "check_B_conditions: need probes and mc_per_probe >= 2");
  const auto& k = model.constants;
  const double c = k.c;
  json report;

  // (B0) heuristic: P g(x + d) -> P g(x) as d -> 0, with common random numbers.
  {
    const auto g = make_observable("tanh", model);
    double worst_ratio = 0.0;
    json ladders = json::array();
    const std::size_t n0 = std::min<std::size_t>(probes.size(), 5);
    for (std::size_t p = 0; p < n0; ++p) {
      const HybridState x = probes[p].x1;
      std::vector<double> diffs;
      const std::uint64_t salt = 1000 + p;
      SeedStream base_stream = stream.split(salt);
      const double base = dual_P(model, g, x, options.mc_per_probe, base_stream).value;
      for (int e = 1; e <= 6; ++e) {
        HybridState xe = x;
        const double d = std::ldexp(1.0, -e);
        xe.y(0) = x.y(0) + d <= model.box.hi(0) ? x.y(0) + d : x.y(0) - d;
        SeedStream crn = stream.split(salt);
        diffs.push_back(std::abs(dual_P(model, g, xe, options.mc_per_probe, crn).value - base));
      }
      worst_ratio = std::max(worst_ratio, diffs.back() / std::max(diffs.front(), 1e-300));
      ladders.push_back(diffs);
    }
    report["B0"] = {{"heuristic", true},
                    {"pass", worst_ratio < 0.25},
                    {"worst_last_to_first_ratio", worst_ratio},
                    {"ladders", ladders},
                    {"note", "continuity in probes of P g for g = tanh, common random numbers, steps 2^-1..2^-6"}};
  }

  // (B1) PV <= aV + b by regression, with a 99% upper envelope for b.
  std::vector<double> vs, pvs, pv_se;
  for (const auto& p : probes) {
    for (const auto* x : {&p.x1, &p.x2}) {
      const auto V = Observable::custom(
          "V", [&](const HybridState& s) { return lyapunov(s, k.y_bar); }, 1e300, 1.0);
      const auto est = dual_P(model, V, *x, options.mc_per_probe, stream);
      vs.push_back(lyapunov(*x, k.y_bar));
      pvs.push_back(est.value);
      pv_se.push_back(est.se);
    }
  }
  const auto line = fit_line(vs, pvs);
  const double a_hat = line.slope;
  double b_env = 0.0;
  for (std::size_t q = 0; q < vs.size(); ++q) b_env = std::max(b_env, pvs[q] - a_hat * vs[q] + 2.576 * pv_se[q]);
  b_env = std::max(b_env, 1e-12);
  report["B1"] = {{"pass", a_hat < 1.0 && a_hat >= 0.0},
                  {"a", a_hat},
                  {"b", b_env},
                  {"intercept", line.intercept},
                  {"r2", line.r2},
                  {"probes", vs.size()}};
  CouplingSetF F;
  F.a = std::clamp(a_hat, 0.0, 1.0 - 1e-9);
  F.b = b_env;
  F.y_bar = k.y_bar;
  report["F"] = {{"a", F.a}, {"b", F.b}, {"threshold", F.threshold()}};

  // (B2)-(B4) from one-step coupled moves at each probe.
  double beta_hat = 0.0;
  bool support_in_F = true;
  json skipped = json::array();
  struct ProbeStats {
    double dist;
    double coupled_freq;
    double contraction;
    std::vector<double> next_dist;
    std::vector<int> zeta;
  };
  std::vector<ProbeStats> stats;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& pr = probes[p];
    const double d0 = rho_c(pr.x1, pr.x2, c);
    if (d0 == 0.0) {
      skipped.push_back({{"probe", p}, {"reason", "zero distance"}});
      continue;
    }
    if (!F.contains(pr.x1, pr.x2)) continue;
    ProbeStats st{d0, 0.0, 0.0, {}, {}};
    CompensatedSum coupled_dist;
    std::size_t ones = 0;
    for (std::size_t r = 0; r < options.mc_per_probe; ++r) {
      const auto nx = coupled_step(model, {pr.x1, pr.x2, 0.0, -1}, stream);
      const double d1 = rho_c(nx.x1, nx.x2, c);
      st.next_dist.push_back(d1);
      st.zeta.push_back(nx.zeta);
      if (nx.zeta == 1) {
        ++ones;
        coupled_dist.add(d1);
        if (!F.contains(nx.x1, nx.x2)) support_in_F = false;
      }
    }
    const double n_mc = static_cast<double>(options.mc_per_probe);
    st.coupled_freq = static_cast<double>(ones) / n_mc;
    st.contraction = coupled_dist.value() / n_mc / d0;
    beta_hat = std::max(beta_hat, st.contraction);
    stats.push_back(std::move(st));
  }
  if (stats.empty()) fail(ErrorCode::InsufficientSamples, "check_B_conditions: no nonzero-distance probes in F");
  report["B2"] = {{"pass", support_in_F && beta_hat < 1.0},
                  {"support_in_F", support_in_F},
                  {"beta", beta_hat},
                  {"probes_used", stats.size()},
                  {"skipped", skipped}};

  double inf_mass = 1.0;
  for (const auto& st : stats) {
    std::size_t inside = 0;
    for (std::size_t r = 0; r < st.next_dist.size(); ++r)
      if (st.zeta[r] == 1 && st.next_dist[r] <= beta_hat * st.dist) ++inside;
    inf_mass = std::min(inf_mass, static_cast<double>(inside) / static_cast<double>(st.next_dist.size()));
  }
  report["B3"] = {{"pass", inf_mass > 0.0}, {"inf_Q_U_beta_rho", inf_mass}};

  double l_hat = 0.0;
  std::vector<double> ds, deficits;
  for (const auto& st : stats) {
    l_hat = std::max(l_hat, (1.0 - st.coupled_freq) / st.dist);
    ds.push_back(st.dist);
    deficits.push_back(1.0 - st.coupled_freq);
  }
  const auto lfit = ds.size() >= 2 ? fit_line(ds, deficits) : LineFit{};
  report["B4"] = {{"pass", std::isfinite(l_hat)}, {"l", l_hat}, {"regression_slope", lfit.slope}};

  // (B5) E gamma^{-rho} from coupled paths started at the probes.
  std::vector<double> rhos;
  std::size_t unfinished = 0;
  for (std::size_t r = 0; r < options.b5_paths; ++r) {
    const auto& pr = probes[r % probes.size()];
    CoupledState s{pr.x1, pr.x2, 0.0, -1};
    std::optional<std::size_t> hit;
    for (std::size_t n = 1; n <= options.b5_max_steps; ++n) {
      s = coupled_step(model, s, stream);
      if (F.hit(s.x1, s.x2)) {
        hit = n;
        break;
      }
    }
    if (hit) rhos.push_back(static_cast<double>(*hit));
    else ++unfinished;
  }
  json grid = json::array();
  double best_gamma = 1.0;
  for (double gamma : options.gammas) {
    json row = {{"gamma", gamma}};
    if (gamma == 1.0) {
      row["estimate"] = 1.0;
      row["stable"] = true;
      row["uninformative"] = true;
      grid.push_back(row);
      continue;
    }
    std::vector<double> v;
    for (double rho : rhos) v.push_back(std::pow(gamma, -rho));
    const auto ms = mean_se(v);
    // Stable: finite, halves agree within 10%, no single path carries > 10%.
    const std::size_t half = v.size() / 2;
    std::vector<double> first(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<double> second(v.begin() + static_cast<std::ptrdiff_t>(half), v.end());
    const double m1 = first.empty() ? 0.0 : mean_se(first).mean;
    const double m2 = second.empty() ? 0.0 : mean_se(second).mean;
    const double max_share = v.empty() ? 1.0 : *std::max_element(v.begin(), v.end()) / (ms.mean * v.size());
    const bool stable = std::isfinite(ms.mean) && unfinished == 0 && v.size() >= 20 &&
                        std::abs(m1 - m2) <= 0.1 * ms.mean && max_share <= 0.1;
    row["estimate"] = ms.mean;
    row["se"] = ms.se;
    row["stable"] = stable;
    grid.push_back(row);
    if (stable) best_gamma = std::min(best_gamma, gamma);
  }
  // gamma = 1 is always finite and says nothing; report the largest gamma < 1 too.
  json largest_informative = nullptr;
  for (const auto& row : grid) {
    const double gamma = row["gamma"].get<double>();
    if (gamma < 1.0 && row["stable"].get<bool>() &&
        (largest_informative.is_null() || gamma > largest_informative.get<double>()))
      largest_informative = gamma;
  }
  report["B5"] = {{"pass", best_gamma < 1.0},
                  {"grid", grid},
                  {"smallest_stable_gamma", best_gamma},
                  {"largest_informative_gamma", largest_informative},
                  {"paths", options.b5_paths},
                  {"unfinished", unfinished},
                  {"max_rho", rhos.empty() ? 0.0 : *std::max_element(rhos.begin(), rhos.end())}};
  bool all = true;
  for (const auto* key : {"B0", "B1", "B2", "B3", "B4", "B5"}) all = all && report[key]["pass"].get<bool>();
  report["all_pass"] = all;
  return report;
}

json GapReport::to_json() const {
  return {{"gap", gap},
          {"se", se},
          {"fit", {{"q", q}, {"r2", r2}, {"points", fit_points}}},
          {"partial_sum", partial_sum},
          {"tail_estimate", tail_estimate},
          {"tail_ratio", tail_ratio},
          {"cap", cap},
          {"cap_respected", cap_respected}};
}

GapReport coupled_increment_gap(const ModelSpec& model, const HybridState& x1, const HybridState& x2,
                                const Observable& gbar, std::size_t n_max, std::size_t n_paths, std::uint64_t seed,
                                double rel_floor) {
  require(n_max >= 1 && n_paths >= 2, "coupled_increment_gap: need n_max >= 1 and n_paths >= 2");
  const double lambda = model.lambda();
  std::vector<std::vector<double>> gaps(n_paths);
  parallel_for(n_paths, [&](std::size_t p) {
    SeedStream stream(seed, p);
    auto& row = gaps[p];
    row.reserve(n_max);
    CoupledState s{x1, x2, 0.0, -1};
    for (std::size_t n = 0; n < n_max; ++n) {
      const auto nx = coupled_step(model, s, stream);
      const double z1 = flow_integral(model, gbar, s.x1, nx.dtau) - apply_G(model, gbar, s.x1) / lambda;
      const double z2 = flow_integral(model, gbar, s.x2, nx.dtau) - apply_G(model, gbar, s.x2) / lambda;
      row.push_back(std::abs(z1 - z2));
      s = nx;
    }
  });
  GapReport out;
  out.cap = 4.0 * std::sqrt(6.0) / lambda * gbar.sup_norm();
  CompensatedSum total;
  for (std::size_t n = 0; n < n_max; ++n) {
    std::vector<double> col(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) col[p] = gaps[p][n];
    const auto ms = mean_se(col);
    out.gap.push_back(ms.mean);
    out.se.push_back(ms.se);
    total.add(ms.mean);
    if (ms.mean > out.cap) out.cap_respected = false;
  }
  out.partial_sum = total.value();
  if (out.gap[0] > 0.0) {
    const auto fit = fit_leading_run(out.gap, rel_floor);
    out.q = fit.rate;
    out.r2 = fit.r2;
    out.fit_points = fit.points;
    if (fit.points >= 3 && fit.rate < 1.0) {
      out.tail_estimate = fit.prefactor * std::pow(fit.rate, static_cast<double>(n_max)) / (1.0 - fit.rate);
      out.tail_ratio = out.tail_estimate / (out.partial_sum + out.tail_estimate);
    }
  } else {
    out.q = 0.0;
    out.r2 = 1.0;
    out.tail_ratio = 0.0;
  }
  return out;
}

}  // namespace pdmp
