#include "pdmp/lil.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/operators.hpp"
#include "pdmp/parallel.hpp"
#include "pdmp/sampler.hpp"
#include "pdmp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>

namespace pdmp {

namespace {

// Stream salts for the sub-tasks of lil_diagnostics; replicas use 0..R-1.
constexpr std::uint64_t kSigmaSalt = 1ull << 62;
constexpr std::uint64_t kTildeSalt = kSigmaSalt + 1;
constexpr std::uint64_t kTimeSalt = kSigmaSalt + 2;

std::size_t pick_atom(const EmpiricalMeasure& mu, SeedStream& stream) {
  const double u = stream.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    acc += mu.weight(k);
    if (u < acc) return k;
  }
  return mu.size() - 1;
}

double autocov(std::span<const double> h, double mean, std::size_t lag) {
  CompensatedSum s;
  for (std::size_t i = 0; i + lag < h.size(); ++i) s.add((h[i] - mean) * (h[i + lag] - mean));
  return s.value() / static_cast<double>(h.size());
}

double mean_of(std::span<const double> h) {
  CompensatedSum s;
  for (double v : h) s.add(v);
  return s.value() / static_cast<double>(h.size());
}

double truncated_series(std::span<const double> h, std::size_t K) {
  const double m = mean_of(h);
  double total = autocov(h, m, 0);
  for (std::size_t k = 1; k <= K; ++k) total += 2.0 * autocov(h, m, k);
  return total;
}

}  // namespace

double lil_normalizer(double x) {
  if (!(x > std::numbers::e)) return 0.0;
  return std::sqrt(2.0 * x * std::log(std::log(x)));
}

double s_discrete(std::span<const double> values, std::size_t n) {
  require(n <= values.size(), "s_discrete: n exceeds the number of values");
  const double norm = lil_normalizer(static_cast<double>(n));
  if (norm == 0.0) return 0.0;
  CompensatedSum s;
  for (std::size_t i = 0; i < n; ++i) s.add(values[i]);
  return s.value() / norm;
}

double s_continuous(const ContinuousPath& path, const Observable& gbar, double t) {
  if (!(t < path.horizon())) {
    std::ostringstream msg;
    msg << "time " << t << " is outside [0, " << path.horizon() << ")";
    fail(ErrorCode::BeyondHorizon, msg.str());
  }
  const double norm = lil_normalizer(t);
  if (norm == 0.0) return 0.0;
  return path.integral(gbar, 0.0, t) / norm;
}

bool CenteredObservable::consistent() const {
  return std::abs(center - center_G) <= 3.0 * std::hypot(center_se, center_G_se);
}

nlohmann::json CenteredObservable::to_json() const {
  return {{"observable", base.name()},
          {"center", center},
          {"center_se", center_se},
          {"center_G", center_G},
          {"center_G_se", center_G_se},
          {"consistent", consistent()},
          {"sample_variance", sample_variance}};
}

CenteredObservable center_observable(const ModelSpec& model, const Observable& g, const HybridState& x0,
                                     const CenteringOptions& options, SeedStream& stream) {
  require(options.n_steps >= 2 * options.n_batches && options.n_batches >= 2,
          "center_observable: need at least two steps per batch");
  const double lambda = model.lambda();
  HybridState x = x0;
  for (std::size_t k = 0; k < options.burn_in; ++k) x = step(model, x, stream).state;

  const std::size_t n = options.n_steps;
  std::vector<double> Gg(n), seg(n), dtau(n);
  std::vector<double> g_nu;
  g_nu.reserve(n);
  const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(1, options.keep));
  std::vector<HybridState> kept;
  for (std::size_t k = 0; k < n; ++k) {
    Gg[k] = apply_G(model, g, x);
    // X(t) at an independent Exp(lambda) time after a post-jump state is a
    // draw from mu_* G = nu_*.
    HybridState probe = x;
    probe.y = model.flow(x.flow, draw_interjump(stream, lambda), x.y);
    g_nu.push_back(g(probe));
    if (k % stride == 0) kept.push_back(x);
    auto tr = step(model, x, stream);
    dtau[k] = tr.dtau;
    seg[k] = flow_integral(model, g, x, tr.dtau);
    x = std::move(tr.state);
  }

  CenteredObservable out{g, g, 0.0, 0.0, 0.0, 0.0, 0.0, EmpiricalMeasure::uniform(std::move(kept)), x};
  const auto bm = batch_means(Gg, options.n_batches);
  out.center_G = bm.mean;
  out.center_G_se = bm.mean_se;

  // Time average as a ratio estimator; its SE comes from the batch ratios.
  const std::size_t size = n / options.n_batches;
  std::vector<double> ratios(options.n_batches);
  CompensatedSum num, den;
  for (std::size_t b = 0; b < options.n_batches; ++b) {
    CompensatedSum bn, bd;
    for (std::size_t k = b * size; k < (b + 1) * size; ++k) {
      bn.add(seg[k]);
      bd.add(dtau[k]);
    }
    ratios[b] = bn.value() / bd.value();
    num.add(bn.value());
    den.add(bd.value());
  }
  out.center = num.value() / den.value();
  out.center_se = mean_se(ratios).se;
  out.sample_variance = mean_se(g_nu).variance;
  out.gbar = g.centered(out.center);
  return out;
}

double martingale_increment(const ModelSpec& model, const Observable& gbar, const HybridState& x, double dtau) {
  return flow_integral(model, gbar, x, dtau) - apply_G(model, gbar, x) / model.lambda();
}

MartingaleSeries martingale_series(const ModelSpec& model, const EmbeddedPath& path, const Observable& gbar) {
  MartingaleSeries out;
  const std::size_t n = path.steps();
  out.M.reserve(n + 1);
  out.Z.reserve(n);
  out.M.push_back(0.0);
  CompensatedSum m;
  for (std::size_t k = 0; k < n; ++k) {
    const double z = martingale_increment(model, gbar, path.state(k), path.interjump(k + 1));
    out.Z.push_back(z);
    m.add(z);
    out.M.push_back(m.value());
  }
  return out;
}

nlohmann::json SigmaEstimate::to_json() const {
  return {{"sigma", sigma}, {"sigma_se", sigma_se}, {"sigma2", sigma2}, {"sigma2_se", sigma2_se}};
}

SigmaEstimate sigma_from_variance(double sigma2, double sigma2_se) {
  SigmaEstimate e;
  e.sigma2 = sigma2;
  e.sigma2_se = sigma2_se;
  e.sigma = std::sqrt(std::max(sigma2, 0.0));
  e.sigma_se = e.sigma > 0.0 ? sigma2_se / (2.0 * e.sigma) : std::sqrt(sigma2_se);
  return e;
}

SeriesResult sigma2_series(std::span<const double> h, const SeriesOptions& options) {
  require(h.size() >= 2, "sigma2_series: need at least two values");
  const double n = static_cast<double>(h.size());
  const double m = mean_of(h);
  const double g0 = autocov(h, m, 0);
  SeriesResult out;
  if (g0 == 0.0) return out;

  // Leading lags whose autocovariance is distinguishable from zero (Bartlett).
  std::vector<double> gamma{g0};
  double rho2 = 0.0;
  std::size_t significant = 0;
  for (std::size_t k = 1; k <= options.max_lag; ++k) {
    const double gk = autocov(h, m, k);
    const double se = g0 * std::sqrt((1.0 + 2.0 * rho2) / n);
    if (!(std::abs(gk) > 2.0 * se)) break;
    gamma.push_back(gk);
    rho2 += (gk / g0) * (gk / g0);
    significant = k;
  }
  if (significant == options.max_lag)
    fail(ErrorCode::SeriesNotDecaying, "autocovariances stay significant up to the lag cap");

  double A = 0.0, q = 0.0;
  if (significant > 0) {
    std::vector<double> lag, mag;
    for (std::size_t k = 0; k <= significant; ++k) {
      lag.push_back(static_cast<double>(k));
      mag.push_back(std::abs(gamma[k]));
    }
    const auto fit = fit_geometric(lag, mag);
    if (!(fit.rate < 1.0) || (fit.points >= 3 && fit.r2 < 0.8)) {
      std::ostringstream msg;
      msg << "no geometric decay of the autocovariances (q = " << fit.rate << ", R^2 = " << fit.r2 << ")";
      fail(ErrorCode::SeriesNotDecaying, msg.str());
    }
    A = fit.prefactor;
    q = fit.rate;
  }

  std::size_t K = significant;
  double total = g0;
  for (std::size_t k = 1; k <= K; ++k) total += 2.0 * gamma[k];
  auto tail = [&](std::size_t k) { return q > 0.0 ? 2.0 * A * std::pow(q, static_cast<double>(k + 1)) / (1.0 - q) : 0.0; };
  while (!(tail(K) < options.tail_fraction * std::abs(total))) {
    if (++K > options.max_lag)
      fail(ErrorCode::SeriesNotDecaying, "geometric tail stays above the cutoff up to the lag cap");
    total += 2.0 * autocov(h, m, K);
  }

  const std::size_t groups = options.groups;
  const std::size_t len = h.size() / groups;
  if (groups < 2 || len < 10 * (K + 1))
    fail(ErrorCode::InsufficientSamples, "sigma2_series: sub-chains too short for the truncation lag");
  std::vector<double> parts(groups);
  for (std::size_t b = 0; b < groups; ++b) parts[b] = truncated_series(h.subspan(b * len, len), K);
  out.estimate = sigma_from_variance(total, mean_se(parts).se);
  out.lag = K;
  out.decay_rate = q;
  return out;
}

nlohmann::json EmbeddedSigma::to_json() const {
  nlohmann::json j{{"batch", batch.to_json()}, {"series_ok", series_ok}, {"agree", agree}};
  if (series_ok) {
    j["series"] = series.to_json();
    j["lag"] = lag;
    j["decay_rate"] = decay_rate;
  } else {
    j["series"] = nullptr;
    j["series_error"] = series_error;
  }
  return j;
}

EmbeddedSigma estimate_sigma_embedded(const ModelSpec& model, const Observable& gbar, const HybridState& x_start,
                                      std::size_t chain_len, std::size_t n_batches, SeedStream& stream,
                                      const SeriesOptions& series) {
  std::vector<double> h(chain_len);
  HybridState x = x_start;
  for (std::size_t k = 0; k < chain_len; ++k) {
    h[k] = apply_G(model, gbar, x);
    x = step(model, x, stream).state;
  }
  EmbeddedSigma out;
  const auto bm = batch_means(h, n_batches);
  out.batch = sigma_from_variance(bm.variance, bm.variance_se);
  try {
    const auto s = sigma2_series(h, series);
    out.series = s.estimate;
    out.lag = s.lag;
    out.decay_rate = s.decay_rate;
    out.series_ok = true;
    const double gap = std::abs(out.series.sigma2 - out.batch.sigma2);
    out.agree = gap <= 2.0 * (out.series.sigma2_se + out.batch.sigma2_se);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SeriesNotDecaying) throw;
    out.series_error = e.what();
  }
  return out;
}

nlohmann::json SigmaTilde::to_json() const {
  auto j = estimate.to_json();
  j["max_z2"] = max_z2;
  j["cap"] = cap;
  return j;
}

SigmaTilde estimate_sigma_tilde(const ModelSpec& model, const Observable& gbar, const EmpiricalMeasure& mu_star,
                                std::size_t n_mc, SeedStream& stream) {
  require(!mu_star.empty() && n_mc >= 2, "estimate_sigma_tilde: need a non-empty mu_* and n_mc >= 2");
  const double lambda = model.lambda();
  std::vector<double> z2(n_mc);
  SigmaTilde out;
  for (std::size_t k = 0; k < n_mc; ++k) {
    const HybridState& x = mu_star.atom(pick_atom(mu_star, stream));
    const double z = martingale_increment(model, gbar, x, draw_interjump(stream, lambda));
    z2[k] = z * z;
    out.max_z2 = std::max(out.max_z2, z2[k]);
  }
  const auto ms = mean_se(z2);
  out.estimate = sigma_from_variance(ms.mean, ms.se);
  out.cap = 6.0 * gbar.sup_norm() * gbar.sup_norm() / (lambda * lambda);
  return out;
}

double sigma_bar(double sigma_embedded, double sigma_tilde, double lambda) {
  require(sigma_embedded >= 0.0 && sigma_tilde >= 0.0 && lambda > 0.0,
          "sigma_bar: inputs must be non-negative and lambda positive");
  if (sigma_embedded == 0.0 && sigma_tilde == 0.0)
    fail(ErrorCode::DegenerateSigma, "both sigma(G gbar) and sigma~(gbar) vanish; g is effectively constant");
  return std::sqrt(lambda) * (sigma_embedded / lambda + sigma_tilde);
}

SigmaEstimate estimate_time_variance(const ModelSpec& model, const Observable& gbar, const HybridState& x_start,
                                     std::size_t chain_len, std::size_t n_batches, SeedStream& stream) {
  std::vector<double> seg(chain_len);
  HybridState x = x_start;
  for (std::size_t k = 0; k < chain_len; ++k) {
    auto tr = step(model, x, stream);
    seg[k] = flow_integral(model, gbar, x, tr.dtau);
    x = std::move(tr.state);
  }
  const auto bm = batch_means(seg, n_batches);
  return sigma_from_variance(model.lambda() * bm.variance, model.lambda() * bm.variance_se);
}

namespace {

struct ReplicaRun {
  ReplicaTrace trace;
  std::vector<double> M;  // M_0..M_{n_track}
  std::vector<double> Z;  // Z_1..Z_{n_track}
  double z2_sum = 0.0;
  double zr_sum = 0.0;
  std::size_t z_count = 0;
};

ReplicaRun run_replica(const ModelSpec& model, const CenteredObservable& g, double T,
                       const std::vector<double>& checkpoints, const LilOptions& options, SeedStream& rs) {
  const double lambda = model.lambda();
  const Observable& gbar = g.gbar;
  const double sup = gbar.sup_norm();
  const double pr = 2.0 + model.constants.r;

  HybridState x = g.mu_star.atom(pick_atom(g.mu_star, rs));
  for (std::size_t k = 0; k < options.burn_in; ++k) x = step(model, x, rs).state;

  ReplicaRun run;
  auto& tr = run.trace;
  run.M.reserve(options.n_track + 1);
  run.M.push_back(0.0);
  run.Z.reserve(options.n_track);
  tr.sup_s = -HUGE_VAL;
  tr.inf_s = HUGE_VAL;

  const double t_lo = options.window * T;
  CompensatedSum integral, gsum, msum;
  double tau = 0.0;
  std::size_t n = 0, next_cp = 0;
  while (tau <= T || n < options.n_track) {
    const double dtau = draw_interjump(rs, lambda);
    const double seg = flow_integral(model, gbar, x, dtau);
    const double Gv = apply_G(model, gbar, x);
    const double z = seg - Gv / lambda;
    const double denom = lil_normalizer(static_cast<double>(n));

    while (next_cp < checkpoints.size() && checkpoints[next_cp] < tau + dtau) {
      const double t = checkpoints[next_cp++];
      const double partial = flow_integral(model, gbar, x, t - tau);
      CheckpointTrace c;
      c.t = t;
      c.N = n;
      c.s = (integral.value() + partial) / lil_normalizer(t);
      if (denom > 0.0) {
        c.I1 = msum.value() / denom;
        c.I2 = partial / denom;
        c.I3 = gsum.value() / lambda / denom;
        c.s_G = gsum.value() / denom;
        c.prefactor = denom / lil_normalizer(t);
        c.I2_bound = sup * dtau / denom;
        if (std::abs(c.I2) > c.I2_bound * (1.0 + 1e-12)) tr.I2_bound_holds = false;
      }
      if (t >= t_lo) {
        tr.sup_s = std::max(tr.sup_s, c.s);
        tr.inf_s = std::min(tr.inf_s, c.s);
        tr.max_abs_I2 = std::max(tr.max_abs_I2, std::abs(c.I2));
      }
      if (next_cp == checkpoints.size()) {
        tr.integral = integral.value() + partial;
        tr.jumps = n;
      }
      tr.checkpoints.push_back(c);
    }

    if (tau <= T && tau + dtau >= t_lo && denom > 0.0) {
      for (std::size_t j = 1; j <= options.i2_grid; ++j) {
        const double t = tau + dtau * static_cast<double>(j) / static_cast<double>(options.i2_grid);
        if (t < t_lo || t > T) continue;
        const double partial = flow_integral(model, gbar, x, t - tau);
        tr.max_abs_I2 = std::max(tr.max_abs_I2, std::abs(partial) / denom);
        const double s = (integral.value() + partial) / lil_normalizer(t);
        tr.sup_s = std::max(tr.sup_s, s);
        tr.inf_s = std::min(tr.inf_s, s);
      }
    }

    integral.add(seg);
    gsum.add(Gv);
    msum.add(z);
    if (tau + dtau <= T) {
      run.z2_sum += z * z;
      run.zr_sum += std::pow(std::abs(z), pr);
      ++run.z_count;
    }
    if (n < options.n_track) {
      run.Z.push_back(z);
      run.M.push_back(msum.value());
    }
    tau += dtau;
    x = jump_after(model, x, dtau, rs);
    ++n;
  }
  return run;
}

double pooled_mean(const std::vector<ReplicaRun>& runs, const std::function<double(const ReplicaRun&)>& f) {
  CompensatedSum s;
  for (const auto& r : runs) s.add(f(r));
  return s.value() / static_cast<double>(runs.size());
}

}  // namespace

LilReport lil_diagnostics(const ModelSpec& model, const CenteredObservable& g, double horizon, std::size_t n_replicas,
                          SeedStream& stream, const LilOptions& options) {
  require(g.nonconstant(), "lil_diagnostics: g is constant on the nu_* sample");
  require(horizon > 16.0 * std::numbers::e, "lil_diagnostics: horizon must be well above e");
  require(n_replicas >= 2, "lil_diagnostics: need at least two replicas");
  require(options.n_track >= 10, "lil_diagnostics: n_track must be at least 10");
  require(!g.mu_star.empty(), "lil_diagnostics: centering carries no mu_* sample");

  const double lambda = model.lambda();
  LilReport rep;
  rep.model_hash = model_hash(model);
  rep.observable = g.base.name();
  rep.seed = stream.root_seed();
  rep.horizon = horizon;
  rep.replicas = n_replicas;
  rep.lambda = lambda;
  rep.center = g.center;
  rep.sup_norm = g.gbar.sup_norm();

  for (double t = horizon; t > std::numbers::e; t /= 2.0) rep.checkpoint_times.push_back(t);
  std::reverse(rep.checkpoint_times.begin(), rep.checkpoint_times.end());

  std::vector<ReplicaRun> runs(n_replicas);
  parallel_for(n_replicas, [&](std::size_t r) {
    SeedStream rs = stream.split(r);
    runs[r] = run_replica(model, g, horizon, rep.checkpoint_times, options, rs);
  });

  // Dyadic n for the h_n^2 curve, always ending at n_track.
  for (std::size_t n = 1; n < options.n_track; n *= 2) rep.h_n.push_back(n);
  rep.h_n.push_back(options.n_track);

  const std::size_t N = options.n_track;
  std::vector<double> h2_all(N + 1, 0.0);
  for (std::size_t n = 1; n <= N; ++n) h2_all[n] = pooled_mean(runs, [n](const ReplicaRun& r) { return r.M[n] * r.M[n]; });
  for (std::size_t n : rep.h_n) {
    std::vector<double> m2(n_replicas);
    for (std::size_t r = 0; r < n_replicas; ++r) m2[r] = runs[r].M[n] * runs[r].M[n];
    const auto ms = mean_se(m2);
    rep.h2.push_back(ms.mean);
    rep.h2_se.push_back(ms.se);
  }
  for (std::size_t n = 1; n <= N; ++n)
    if (h2_all[n] > 0.0) {
      rep.n_bar = n;
      break;
    }

  // Slope of M_n^2 against n over the last decade, per replica; the pooled
  // slope is their mean, and the spread gives an honest SE.
  {
    std::vector<double> xs;
    for (std::size_t n = N / 10; n <= N; ++n) xs.push_back(static_cast<double>(n));
    std::vector<double> slopes(n_replicas);
    for (std::size_t r = 0; r < n_replicas; ++r) {
      std::vector<double> ys;
      for (std::size_t n = N / 10; n <= N; ++n) ys.push_back(runs[r].M[n] * runs[r].M[n]);
      slopes[r] = fit_line(xs, ys).slope;
    }
    const auto ms = mean_se(slopes);
    rep.h2_slope = ms.mean;
    rep.h2_slope_se = ms.se;
  }

  if (rep.n_bar > 0) {
    rep.hs_ratio = pooled_mean(runs, [&](const ReplicaRun& r) {
      CompensatedSum s;
      for (std::size_t l = 0; l < N; ++l) s.add(r.Z[l] * r.Z[l]);
      return s.value() / h2_all[N];
    });
    double first4 = 0.0, first1 = 0.0;
    for (std::size_t n = rep.n_bar; n <= N; ++n) {
      const double h = std::sqrt(h2_all[n]);
      const double e4 = pooled_mean(runs, [&](const ReplicaRun& r) {
        const double z = r.Z[n - 1];
        return std::abs(z) < h ? z * z * z * z : 0.0;
      });
      const double e1 = pooled_mean(runs, [&](const ReplicaRun& r) {
        const double z = std::abs(r.Z[n - 1]);
        return z >= h ? z : 0.0;
      });
      rep.hs_sum4 += e4 / (h2_all[n] * h2_all[n]);
      rep.hs_sum1 += e1 / h;
      if (n == N / 2) {
        first4 = rep.hs_sum4;
        first1 = rep.hs_sum1;
      }
    }
    rep.hs_sum4_tail = rep.hs_sum4 > 0.0 ? (rep.hs_sum4 - first4) / rep.hs_sum4 : 0.0;
    rep.hs_sum1_tail = rep.hs_sum1 > 0.0 ? (rep.hs_sum1 - first1) / rep.hs_sum1 : 0.0;
  }

  {
    CompensatedSum z2, zr;
    std::size_t count = 0;
    for (const auto& r : runs) {
      z2.add(r.z2_sum);
      zr.add(r.zr_sum);
      count += r.z_count;
    }
    rep.z2_mean = z2.value() / static_cast<double>(count);
    rep.zr_mean = zr.value() / static_cast<double>(count);
    const double sup = rep.sup_norm;
    const double pr = 2.0 + model.constants.r;
    rep.z2_cap = 6.0 * sup * sup / (lambda * lambda);
    rep.zr_bound = std::pow(2.0, pr - 1.0) * std::pow(sup, pr) *
                   (std::tgamma(pr + 1.0) / std::pow(lambda, pr) + std::pow(lambda, -pr));
  }

  {
    SeedStream s1 = stream.split(kSigmaSalt);
    rep.sigma_embedded =
        estimate_sigma_embedded(model, g.gbar, g.last, options.sigma_chain, options.sigma_batches, s1);
    SeedStream s2 = stream.split(kTildeSalt);
    rep.sigma_tilde = estimate_sigma_tilde(model, g.gbar, g.mu_star, options.tilde_mc, s2);
    SeedStream s3 = stream.split(kTimeSalt);
    rep.time_variance =
        estimate_time_variance(model, g.gbar, g.last, options.sigma_chain, options.sigma_batches, s3);
    const auto& se = rep.sigma_embedded.batch;
    const auto& st = rep.sigma_tilde.estimate;
    rep.sigma_bar = sigma_bar(se.sigma, st.sigma, lambda);
    rep.sigma_bar_se = std::sqrt(lambda) * std::hypot(se.sigma_se / lambda, st.sigma_se);
  }

  std::vector<double> clt(n_replicas), sups(n_replicas), infs(n_replicas);
  CompensatedSum rate, pref;
  for (std::size_t r = 0; r < n_replicas; ++r) {
    const auto& tr = runs[r].trace;
    clt[r] = tr.integral / std::sqrt(horizon);
    sups[r] = tr.sup_s;
    infs[r] = tr.inf_s;
    rate.add(static_cast<double>(tr.jumps) / horizon);
    pref.add(tr.checkpoints.back().prefactor);
    rep.max_abs_I2 = std::max(rep.max_abs_I2, tr.max_abs_I2);
    rep.I2_bound_holds = rep.I2_bound_holds && tr.I2_bound_holds;
  }
  const double R = static_cast<double>(n_replicas);
  rep.renewal_rate = rate.value() / R;
  rep.prefactor = pref.value() / R;
  rep.sup_s = median(sups);
  rep.inf_s = median(infs);
  rep.normalized_sup = rep.sup_s / rep.sigma_bar;
  const auto ms = mean_se(clt);
  rep.clt_variance = ms.variance;
  rep.clt_variance_se = ms.variance * std::sqrt(2.0 / (R - 1.0));
  rep.clt_ratio = rep.clt_variance / (rep.sigma_bar * rep.sigma_bar);
  rep.clt_ratio_direct = rep.time_variance.sigma2 > 0.0 ? rep.clt_variance / rep.time_variance.sigma2 : 0.0;

  rep.traces.reserve(n_replicas);
  for (std::size_t r = 0; r < n_replicas; ++r) {
    auto& tr = runs[r].trace;
    for (std::size_t n : rep.h_n) tr.M_checkpoints.push_back(runs[r].M[n]);
    if (r == 0 && options.full_traces) tr.Z = std::move(runs[r].Z);
    rep.traces.push_back(std::move(tr));
  }
  return rep;
}

nlohmann::json LilReport::to_json() const {
  nlohmann::json j;
  j["header"] = {{"model_hash", model_hash}, {"observable", observable}, {"seed", seed},
                 {"horizon", horizon},       {"replicas", replicas},     {"lambda", lambda},
                 {"center", center},         {"sup_norm", sup_norm}};
  j["sigma"] = {{"embedded", sigma_embedded.to_json()},
                {"tilde", sigma_tilde.to_json()},
                {"bar", sigma_bar},
                {"bar_se", sigma_bar_se},
                {"time_variance", time_variance.to_json()}};
  j["renewal"] = {{"rate", renewal_rate}, {"prefactor", prefactor}, {"sqrt_lambda", std::sqrt(lambda)}};
  j["remainder"] = {{"max_abs_I2", max_abs_I2}, {"bound_holds", I2_bound_holds}};
  j["envelope"] = {{"sup_median", sup_s}, {"inf_median", inf_s}, {"normalized_sup", normalized_sup}};
  j["clt"] = {{"variance", clt_variance},
              {"variance_se", clt_variance_se},
              {"ratio", clt_ratio},
              {"ratio_direct", clt_ratio_direct}};
  j["martingale"] = {{"n", h_n},
                     {"h2", h2},
                     {"h2_se", h2_se},
                     {"n_bar", n_bar},
                     {"h2_slope", h2_slope},
                     {"h2_slope_se", h2_slope_se},
                     {"z2_mean", z2_mean},
                     {"z2_cap", z2_cap},
                     {"zr_mean", zr_mean},
                     {"zr_bound", zr_bound}};
  j["heyde_scott"] = {{"ratio", hs_ratio},
                      {"sum4", hs_sum4},
                      {"sum4_tail_share", hs_sum4_tail},
                      {"sum1", hs_sum1},
                      {"sum1_tail_share", hs_sum1_tail}};
  j["checkpoints"] = checkpoint_times;
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& tr : traces) {
    nlohmann::json r;
    std::vector<double> s, sg, i1, i2, i3, pf;
    std::vector<std::size_t> N;
    for (const auto& c : tr.checkpoints) {
      s.push_back(c.s);
      sg.push_back(c.s_G);
      i1.push_back(c.I1);
      i2.push_back(c.I2);
      i3.push_back(c.I3);
      pf.push_back(c.prefactor);
      N.push_back(c.N);
    }
    r = {{"N", N},         {"s", s},         {"s_G", sg},   {"I1", i1},
         {"I2", i2},       {"I3", i3},       {"prefactor", pf},
         {"sup_s", tr.sup_s}, {"inf_s", tr.inf_s}, {"max_abs_I2", tr.max_abs_I2},
         {"integral", tr.integral}, {"M", tr.M_checkpoints}};
    if (!tr.Z.empty()) r["Z"] = tr.Z;
    reps.push_back(std::move(r));
  }
  j["replicas"] = std::move(reps);
  return j;
}

void LilReport::write_csv(std::ostream& out) const {
  out << "replica,t,N,s,s_G,I1,I2,I3,prefactor,I2_bound\n";
  out.precision(17);
  for (std::size_t r = 0; r < traces.size(); ++r)
    for (const auto& c : traces[r].checkpoints)
      out << r << ',' << c.t << ',' << c.N << ',' << c.s << ',' << c.s_G << ',' << c.I1 << ',' << c.I2 << ','
          << c.I3 << ',' << c.prefactor << ',' << c.I2_bound << '\n';
}

}  // namespace pdmp
