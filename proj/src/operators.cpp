#include "pdmp/operators.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/quadrature.hpp"
#include "pdmp/sampler.hpp"
#include "pdmp/simulate.hpp"
#include "pdmp/stats.hpp"

#include <algorithm>
#include <cmath>

namespace pdmp {

EmpiricalMeasure apply_P(const ModelSpec& model, const EmpiricalMeasure& mu, std::size_t samples_per_atom,
                         SeedStream& stream) {
  require(samples_per_atom >= 1, "apply_P: samples_per_atom must be >= 1");
  std::vector<HybridState> atoms;
  std::vector<double> weights;
  atoms.reserve(mu.size() * samples_per_atom);
  weights.reserve(mu.size() * samples_per_atom);
  const double share = 1.0 / static_cast<double>(samples_per_atom);
  for (std::size_t k = 0; k < mu.size(); ++k)
    for (std::size_t s = 0; s < samples_per_atom; ++s) {
      atoms.push_back(step(model, mu.atom(k), stream).state);
      weights.push_back(mu.weight(k) * share);
    }
  // Renormalize away the rounding of the shares.
  CompensatedSum total;
  for (double w : weights) total.add(w);
  for (double& w : weights) w /= total.value();
  return EmpiricalMeasure(std::move(atoms), std::move(weights));
}

Estimate dual_P(const ModelSpec& model, const Observable& g, const HybridState& x, std::size_t n_mc,
                SeedStream& stream) {
  require(n_mc >= 2, "dual_P: n_mc must be >= 2");
  std::vector<double> v(n_mc);
  for (auto& s : v) s = g(step(model, x, stream).state);
  const auto ms = mean_se(v);
  return {ms.mean, ms.se};
}

double apply_G(const ModelSpec& model, const Observable& g, const HybridState& x, double quad_tol) {
  const auto& flow = model.flows[x.flow];
  const double lambda = model.lambda();
  if (auto closed = g.laplace_closed_form(flow, x, lambda)) return *closed;
  const double sup = std::max(g.sup_norm(), 1e-300);
  const double t_cut = std::max(1.0, std::log(sup / quad_tol)) / lambda;
  const double piece = 2.0 / lambda;
  HybridState probe = x;
  auto integrand = [&](double t) {
    probe.y = flow.apply(t, x.y);
    return lambda * std::exp(-lambda * t) * g(probe);
  };
  CompensatedSum total;
  for (double a = 0.0; a < t_cut; a += piece) total.add(integrate(integrand, a, std::min(a + piece, t_cut), quad_tol));
  return total.value();
}

EmpiricalMeasure sample_G(const ModelSpec& model, const EmpiricalMeasure& mu, std::size_t samples_per_atom,
                          SeedStream& stream) {
  require(samples_per_atom >= 1, "sample_G: samples_per_atom must be >= 1");
  std::vector<HybridState> atoms;
  std::vector<double> weights;
  const double share = 1.0 / static_cast<double>(samples_per_atom);
  for (std::size_t k = 0; k < mu.size(); ++k)
    for (std::size_t s = 0; s < samples_per_atom; ++s) {
      const auto& x = mu.atom(k);
      const double t = draw_interjump(stream, model.lambda());
      atoms.push_back({model.flow(x.flow, t, x.y), x.flow});
      weights.push_back(mu.weight(k) * share);
    }
  CompensatedSum total;
  for (double w : weights) total.add(w);
  for (double& w : weights) w /= total.value();
  return EmpiricalMeasure(std::move(atoms), std::move(weights));
}

EmpiricalMeasure apply_W(const ModelSpec& model, const EmpiricalMeasure& mu, std::size_t samples_per_atom,
                         SeedStream& stream) {
  require(samples_per_atom >= 1, "apply_W: samples_per_atom must be >= 1");
  std::vector<HybridState> atoms;
  std::vector<double> weights;
  const double share = 1.0 / static_cast<double>(samples_per_atom);
  for (std::size_t k = 0; k < mu.size(); ++k)
    for (std::size_t s = 0; s < samples_per_atom; ++s) {
      atoms.push_back(jump_after(model, mu.atom(k), 0.0, stream));
      weights.push_back(mu.weight(k) * share);
    }
  CompensatedSum total;
  for (double w : weights) total.add(w);
  for (double& w : weights) w /= total.value();
  return EmpiricalMeasure(std::move(atoms), std::move(weights));
}

double fortet_mourier_subsampled(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double c,
                                 std::size_t support, std::size_t resamples, SeedStream& stream) {
  if (a.size() <= support && b.size() <= support) return fortet_mourier(a, b, c);
  std::vector<double> values;
  for (std::size_t r = 0; r < std::max<std::size_t>(resamples, 1); ++r) {
    const auto sa = a.size() <= support ? a : a.subsample(support, stream);
    const auto sb = b.size() <= support ? b : b.subsample(support, stream);
    values.push_back(fortet_mourier(sa, sb, c));
  }
  return median(values);
}

InvariantEstimate estimate_invariants(const ModelSpec& model, const HybridState& x0, const InvariantOptions& options,
                                      SeedStream& stream) {
  require(options.burn_in >= 1 && options.n_keep >= 1, "estimate_invariants: burn_in and n_keep must be >= 1");
  InvariantEstimate est;
  est.seed = stream.root_seed();
  const auto path = simulate_embedded(model, x0, options.burn_in + options.n_keep, stream);
  std::vector<HybridState> kept;
  kept.reserve(options.n_keep);
  for (std::size_t k = options.burn_in; k < options.burn_in + options.n_keep; ++k) kept.push_back(path.state(k));
  est.mu = EmpiricalMeasure::uniform(std::move(kept));

  SeedStream g_stream = stream.split(0x6a);
  est.nu_G = sample_G(model, est.mu, 1, g_stream);

  const ContinuousPath cp(model, path);
  const double t0 = path.jump_time(options.burn_in);
  const double t1 = path.jump_time(options.burn_in + options.n_keep);
  const double dt = (t1 - t0) / static_cast<double>(options.n_keep);
  std::vector<HybridState> grid;
  grid.reserve(options.n_keep);
  for (std::size_t k = 0; k < options.n_keep; ++k) grid.push_back(cp.at(t0 + (static_cast<double>(k) + 0.5) * dt));
  est.nu_time = EmpiricalMeasure::uniform(std::move(grid));

  SeedStream fm_stream = stream.split(0x6b);
  const std::size_t support = 2 * options.n_keep <= kDefaultSupportCap ? options.n_keep : options.support;
  est.discrepancy =
      fortet_mourier_subsampled(est.nu_G, est.nu_time, model.constants.c, support, options.resamples, fm_stream);
  return est;
}

nlohmann::json DecayReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t n = 0; n < dfm.size(); ++n) rows.push_back({{"n", n}, {"dfm", dfm[n]}});
  return {{"decay", rows},
          {"noise_floor", noise_floor},
          {"fit", {{"q", q}, {"r2", r2}, {"first", fit_first}, {"last", fit_last}, {"points", fit_points}}}};
}

DecayReport ergodicity_decay(const ModelSpec& model, const EmpiricalMeasure& mu0, const EmpiricalMeasure& mu_star,
                             const DecayOptions& options, SeedStream& stream) {
  require(options.support >= 2, "ergodicity_decay: support must be >= 2");
  const double c = model.constants.c;
  const std::size_t resamples = std::max<std::size_t>(options.resamples, 1);
  DecayReport report;

  std::vector<double> floor_values;
  for (std::size_t r = 0; r < resamples; ++r)
    floor_values.push_back(
        fortet_mourier(mu_star.subsample(options.support, stream), mu_star.subsample(options.support, stream), c));
  report.noise_floor = median(floor_values);

  // A particle cloud carries mu0 P^n forward one step at a time.
  auto cloud = mu0.subsample(options.support, stream).atoms();
  for (std::size_t n = 0; n <= options.n_steps; ++n) {
    const auto current = EmpiricalMeasure::uniform(cloud);
    std::vector<double> values;
    for (std::size_t r = 0; r < resamples; ++r)
      values.push_back(fortet_mourier(current, mu_star.subsample(options.support, stream), c));
    report.dfm.push_back(median(values));
    if (n < options.n_steps)
      for (auto& x : cloud) x = step(model, x, stream).state;
  }

  // Fit window: the first contiguous run strictly between the noise floor
  // band and the saturation ceiling.
  const double lo = options.floor_factor * report.noise_floor;
  std::size_t first = report.dfm.size();
  for (std::size_t n = 0; n < report.dfm.size(); ++n)
    if (report.dfm[n] > lo && report.dfm[n] < options.ceiling) {
      first = n;
      break;
    }
  std::size_t last = first;
  while (last + 1 < report.dfm.size() && report.dfm[last + 1] > lo && report.dfm[last + 1] < options.ceiling) ++last;
  if (first < report.dfm.size() && last - first + 1 >= 3) {
    std::vector<double> ns, ys;
    for (std::size_t n = first; n <= last; ++n) {
      ns.push_back(static_cast<double>(n));
      ys.push_back(report.dfm[n]);
    }
    const auto fit = fit_geometric(ns, ys);
    report.q = fit.rate;
    report.r2 = fit.r2;
    report.fit_first = first;
    report.fit_last = last;
    report.fit_points = ns.size();
  }
  return report;
}

}  // namespace pdmp
