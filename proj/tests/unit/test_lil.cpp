#include "support.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/gallery.hpp"
#include "pdmp/lil.hpp"
#include "pdmp/operators.hpp"
#include "pdmp/sampler.hpp"
#include "pdmp/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace pdmp;

namespace {

CenteringOptions quick_centering() {
  CenteringOptions o;
  o.burn_in = 1000;
  o.n_steps = 40'000;
  o.n_batches = 40;
  o.keep = 4000;
  return o;
}

LilOptions quick_lil() {
  LilOptions o;
  o.burn_in = 200;
  o.n_track = 512;
  o.sigma_chain = 100'000;
  o.sigma_batches = 100;
  o.tilde_mc = 20'000;
  return o;
}

}  // namespace

TEST_CASE("s_n vanishes up to e and matches direct arithmetic at n = 10") {
  const std::vector<double> ones(10, 1.0), zeros(50, 0.0);
  CHECK(s_discrete(ones, 2) == 0.0);
  for (std::size_t n = 0; n <= 50; ++n) CHECK(s_discrete(zeros, n) == 0.0);
  const double oracle = 10.0 / std::sqrt(20.0 * std::log(std::log(10.0)));
  CHECK(s_discrete(ones) == doctest::Approx(oracle).epsilon(1e-14));
  // 10 / sqrt(20 * 0.834032...) = 2.448463...
  CHECK(s_discrete(ones) == doctest::Approx(2.448463).epsilon(1e-6));
  CHECK_THROWS(s_discrete(ones, 11));
}

TEST_CASE("s(g)(t) is zero below e, additive across splits and bounded by the horizon") {
  const auto gm = load_gallery("relaxation");
  SeedStream stream(5, 0);
  ContinuousPath path(gm.model, simulate_until(gm.model, make_state(2.0, 0), 200.0, stream));
  const auto g = make_observable("y", gm.model).centered(0.3);
  CHECK(s_continuous(path, g, 2.0) == 0.0);
  const double t = 150.0;
  const double whole = s_continuous(path, g, t) * lil_normalizer(t);
  const double split = path.integral(g, 0.0, 61.7) + path.integral(g, 61.7, t);
  CHECK(whole == doctest::Approx(split).epsilon(1e-10));
  try {
    s_continuous(path, g, path.horizon() + 1.0);
    FAIL("expected BeyondHorizon");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BeyondHorizon);
  }
}

TEST_CASE("centering kills constants and the two centers agree on every gallery model") {
  SeedStream stream(21, 0);
  {
    const auto gm = load_gallery("relaxation");
    const auto c = center_observable(gm.model, Observable::constant(3.0), make_state(1.0, 0), quick_centering(), stream);
    CHECK(c.center == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_FALSE(c.nonconstant());
    ContinuousPath path(gm.model, simulate_until(gm.model, make_state(1.0, 0), 100.0, stream));
    CHECK(std::abs(s_continuous(path, c.gbar, 90.0)) <= 3.0 * c.center_se * 90.0 / lil_normalizer(90.0) + 1e-12);
  }
  for (const auto& name : gallery_names()) {
    const auto gm = load_gallery(name);
    const auto c = center_observable(gm.model, make_observable("y", gm.model), make_state(1.0, 0), quick_centering(),
                                     stream);
    INFO(name << ": " << c.to_json().dump());
    CHECK(c.nonconstant());
    CHECK(c.consistent());
  }
}

TEST_CASE("martingale series: M is the running sum of Z, zero observable gives zero") {
  const auto gm = load_gallery("two-flow-switch");
  SeedStream stream(8, 0);
  const auto path = simulate_embedded(gm.model, make_state(0.5, 1), 2000, stream);
  const auto zero = martingale_series(gm.model, path, Observable::constant(0.0));
  for (double z : zero.Z) CHECK(z == 0.0);
  for (double m : zero.M) CHECK(m == 0.0);

  const auto g = make_observable("y", gm.model).centered(0.4);
  const auto ms = martingale_series(gm.model, path, g);
  REQUIRE(ms.M.size() == path.steps() + 1);
  CHECK(ms.M[0] == 0.0);
  double running = 0.0;
  for (std::size_t k = 0; k < ms.Z.size(); ++k) {
    running += ms.Z[k];
    CHECK(ms.M[k + 1] == doctest::Approx(running).epsilon(1e-12));
  }
  // Z_{k+1} = F(gbar)(X_k, dtau_{k+1}) - G gbar(X_k) / lambda, term by term.
  const double lambda = gm.model.lambda();
  for (std::size_t k : {0ul, 17ul, 999ul}) {
    const auto x = path.state(k);
    const double oracle = flow_integral(gm.model, g, x, path.interjump(k + 1)) - apply_G(gm.model, g, x) / lambda;
    CHECK(ms.Z[k] == doctest::Approx(oracle).epsilon(1e-14));
  }
}

TEST_CASE("martingale increments have zero conditional mean and respect the second-moment cap") {
  const auto gm = load_gallery("relaxation");
  const auto gbar = make_observable("y", gm.model).centered(0.3);
  SeedStream stream(31, 0);
  // Fixed starting cells; Z_1 from each should average to 0.
  for (double y : {0.0, 0.4, 1.0, 3.0, 11.0}) {
    const auto x = make_state(y, 0);
    std::vector<double> z(20'000), z2(20'000);
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = martingale_increment(gm.model, gbar, x, draw_interjump(stream, gm.model.lambda()));
      z2[k] = z[k] * z[k];
    }
    const auto ms = mean_se(z);
    INFO("y = " << y << " mean " << ms.mean << " se " << ms.se);
    CHECK(std::abs(ms.mean) < 4.0 * ms.se);
    const double sup = gbar.sup_norm();
    CHECK(mean_se(z2).mean <= 6.0 * sup * sup);
  }
}

TEST_CASE("series estimator recovers the AR(1) long-run variance") {
  // h_k = phi h_{k-1} + e_k: sigma^2 = 1 / (1 - phi)^2 for unit innovations.
  SeedStream stream(3, 0);
  const double phi = 0.6;
  std::vector<double> h(400'000);
  double v = 0.0;
  for (auto& x : h) x = v = phi * v + stream.standard_normal();
  const auto s = sigma2_series(h);
  const double oracle = 1.0 / ((1.0 - phi) * (1.0 - phi));
  INFO("sigma2 " << s.estimate.sigma2 << " se " << s.estimate.sigma2_se << " K " << s.lag);
  CHECK(std::abs(s.estimate.sigma2 - oracle) < 3.0 * s.estimate.sigma2_se + 0.05 * oracle);
  CHECK(s.decay_rate == doctest::Approx(phi).epsilon(0.1));

  // Near unit root on a short chain: no geometric fit within the lag cap.
  std::vector<double> walk(20'000);
  v = 0.0;
  for (auto& x : walk) x = v = 0.9995 * v + stream.standard_normal();
  try {
    sigma2_series(walk);
    FAIL("expected SeriesNotDecaying");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SeriesNotDecaying);
  }
}

TEST_CASE("iid-jump: both embedded estimators reproduce Var(G gbar) = 1/48") {
  const auto gm = load_gallery("iid-jump");
  REQUIRE(gm.oracle.sigma2_G_y.has_value());
  SeedStream stream(44, 0);
  const auto gbar = make_observable("y", gm.model).centered(0.25);
  const auto est = estimate_sigma_embedded(gm.model, gbar, make_state(0.5, 0), 200'000, 200, stream);
  INFO(est.to_json().dump());
  const double oracle = *gm.oracle.sigma2_G_y;
  CHECK(std::abs(est.batch.sigma2 - oracle) < 3.0 * est.batch.sigma2_se);
  REQUIRE(est.series_ok);
  CHECK(std::abs(est.series.sigma2 - oracle) < 3.0 * est.series.sigma2_se + 1e-3 * oracle);
  CHECK(est.agree);

  const auto zero = estimate_sigma_embedded(gm.model, Observable::constant(0.0), make_state(0.5, 0), 1000, 10, stream);
  CHECK(zero.batch.sigma == 0.0);
  CHECK(zero.series.sigma == 0.0);
}

TEST_CASE("sigma tilde stays under its cap and vanishes for a zero observable") {
  const auto gm = load_gallery("relaxation");
  SeedStream stream(12, 0);
  const auto c = center_observable(gm.model, make_observable("y", gm.model), make_state(1.0, 0), quick_centering(),
                                   stream);
  const auto t = estimate_sigma_tilde(gm.model, c.gbar, c.mu_star, 20'000, stream);
  CHECK(t.estimate.sigma2 > 0.0);
  CHECK(t.estimate.sigma2 <= t.cap);
  CHECK(t.max_z2 <= t.cap);
  const auto zero = estimate_sigma_tilde(gm.model, Observable::constant(0.0), c.mu_star, 100, stream);
  CHECK(zero.estimate.sigma == 0.0);
}

TEST_CASE("sigma_bar arithmetic and the degenerate case") {
  CHECK(sigma_bar(0.0, 0.7, 4.0) == doctest::Approx(1.4));
  CHECK(sigma_bar(0.7, 0.0, 1.0) == doctest::Approx(0.7));
  CHECK(sigma_bar(0.3, 0.2, 1.0) == doctest::Approx(0.5));
  try {
    sigma_bar(0.0, 0.0, 2.0);
    FAIL("expected DegenerateSigma");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSigma);
  }
  CHECK_THROWS(sigma_bar(-0.1, 0.2, 1.0));
}

TEST_CASE("lil report: decomposition identity, remainder bound and replayable Z series") {
  const auto gm = load_gallery("relaxation");
  SeedStream cs(70, 0);
  const auto c = center_observable(gm.model, make_observable("y", gm.model), make_state(1.0, 0), quick_centering(), cs);
  auto opts = quick_lil();
  opts.full_traces = true;
  SeedStream ls(71, 0);
  const auto rep = lil_diagnostics(gm.model, c, 2000.0, 8, ls, opts);
  REQUIRE(rep.traces.size() == 8);
  CHECK(rep.I2_bound_holds);
  for (const auto& tr : rep.traces)
    for (const auto& cp : tr.checkpoints) {
      if (cp.N <= 2) continue;
      // s(t) = prefactor (I1 + I2 + I3)
      CHECK(cp.s == doctest::Approx(cp.prefactor * (cp.I1 + cp.I2 + cp.I3)).epsilon(1e-9));
      CHECK(cp.I3 * rep.lambda == doctest::Approx(cp.s_G).epsilon(1e-12));
    }
  const auto& tr0 = rep.traces[0];
  REQUIRE(tr0.Z.size() == opts.n_track);
  for (std::size_t k = 0; k < rep.h_n.size(); ++k) {
    double m = 0.0;
    for (std::size_t l = 0; l < rep.h_n[k]; ++l) m += tr0.Z[l];
    CHECK(tr0.M_checkpoints[k] == doctest::Approx(m).epsilon(1e-10));
  }
  CHECK(rep.z2_mean <= rep.z2_cap);
  CHECK(rep.zr_mean <= rep.zr_bound);
  CHECK(rep.n_bar >= 1);
  CHECK(rep.renewal_rate == doctest::Approx(1.0).epsilon(0.05));

  // Same seed, same report.
  SeedStream again(71, 0);
  const auto rep2 = lil_diagnostics(gm.model, c, 2000.0, 8, again, opts);
  CHECK(rep2.to_json().dump() == rep.to_json().dump());
}

TEST_CASE("doubling g doubles every statistic") {
  const auto gm = load_gallery("two-flow-switch");
  SeedStream cs(90, 0);
  const auto c = center_observable(gm.model, make_observable("y", gm.model), make_state(1.0, 0), quick_centering(), cs);
  auto c2 = c;
  c2.base = c.base.scaled(2.0);
  c2.gbar = c.gbar.scaled(2.0);
  c2.center = 2.0 * c.center;
  auto opts = quick_lil();
  opts.full_traces = true;
  SeedStream s1(91, 0), s2(91, 0);
  const auto a = lil_diagnostics(gm.model, c, 500.0, 4, s1, opts);
  const auto b = lil_diagnostics(gm.model, c2, 500.0, 4, s2, opts);
  for (std::size_t r = 0; r < 4; ++r) {
    const auto& ta = a.traces[r];
    const auto& tb = b.traces[r];
    for (std::size_t k = 0; k < ta.checkpoints.size(); ++k) {
      CHECK(tb.checkpoints[k].s == doctest::Approx(2.0 * ta.checkpoints[k].s).epsilon(1e-12));
      CHECK(tb.checkpoints[k].s_G == doctest::Approx(2.0 * ta.checkpoints[k].s_G).epsilon(1e-12));
    }
    for (std::size_t k = 0; k < ta.M_checkpoints.size(); ++k)
      CHECK(tb.M_checkpoints[k] == doctest::Approx(2.0 * ta.M_checkpoints[k]).epsilon(1e-12));
  }
  for (std::size_t k = 0; k < a.traces[0].Z.size(); ++k)
    CHECK(b.traces[0].Z[k] == doctest::Approx(2.0 * a.traces[0].Z[k]).epsilon(1e-12));
  CHECK(b.sigma_bar == doctest::Approx(2.0 * a.sigma_bar).epsilon(1e-12));
}
