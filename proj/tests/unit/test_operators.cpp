#include "support.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/gallery.hpp"
#include "pdmp/operators.hpp"
#include "pdmp/quadrature.hpp"
#include "pdmp/simulate.hpp"
#include "pdmp/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace pdmp;

namespace {

// Dense tableau simplex for max c^T x s.t. A x <= b, x >= 0 with b >= 0
// (so the origin is feasible). Bland's rule; small problems only.
double simplex_max(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                   const std::vector<double>& c) {
  const std::size_t m = A.size(), n = c.size();
  std::vector<std::vector<double>> T(m + 1, std::vector<double>(n + m + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
    T[i][n + i] = 1.0;
    T[i][n + m] = b[i];
  }
  for (std::size_t j = 0; j < n; ++j) T[m][j] = -c[j];
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;
  for (int iter = 0; iter < 100000; ++iter) {
    std::size_t enter = n + m;
    for (std::size_t j = 0; j < n + m; ++j)
      if (T[m][j] < -1e-12) {
        enter = j;
        break;
      }
    if (enter == n + m) return T[m][n + m];
    std::size_t leave = m;
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (T[i][enter] > 1e-12) {
        const double ratio = T[i][n + m] / T[i][enter];
        if (leave == m || ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    REQUIRE(leave < m);
    const double pivot = T[leave][enter];
    for (auto& v : T[leave]) v /= pivot;
    for (std::size_t i = 0; i <= m; ++i)
      if (i != leave && T[i][enter] != 0.0) {
        const double f = T[i][enter];
        for (std::size_t j = 0; j <= n + m; ++j) T[i][j] -= f * T[leave][j];
      }
    basis[leave] = enter;
  }
  FAIL("simplex did not terminate");
  return 0.0;
}

// Primal LP over f-values at the atoms: max <f, mu1 - mu2>, |f| <= 1,
// f_u - f_v <= rho(u, v). Substituting f = g - 1 gives g in [0, 2].
double fm_oracle(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double c) {
  std::vector<HybridState> nodes = a.atoms();
  nodes.insert(nodes.end(), b.atoms().begin(), b.atoms().end());
  const std::size_t n = nodes.size();
  std::vector<double> obj(n, 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) obj[k] += a.weight(k);
  for (std::size_t k = 0; k < b.size(); ++k) obj[a.size() + k] -= b.weight(k);
  std::vector<std::vector<double>> A;
  std::vector<double> rhs;
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<double> row(n, 0.0);
    row[u] = 1.0;
    A.push_back(row);
    rhs.push_back(2.0);
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v) continue;
      std::vector<double> r(n, 0.0);
      r[u] = 1.0;
      r[v] = -1.0;
      A.push_back(r);
      rhs.push_back(rho_c(nodes[u], nodes[v], c));
    }
  }
  // <g - 1, mu1 - mu2> = <g, mu1 - mu2> for equal masses.
  return simplex_max(A, rhs, obj);
}

HybridState state2(double y0, double y1, int flow) {
  Point p(2);
  p << y0, y1;
  return {p, flow};
}

EmpiricalMeasure random_measure(SeedStream& s, std::size_t n, int flows, int dim, double spread) {
  std::vector<HybridState> atoms;
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    HybridState x;
    x.y = Point(dim);
    for (int c = 0; c < dim; ++c) x.y(c) = spread * s.uniform();
    x.flow = static_cast<int>(s.uniform() * flows);
    atoms.push_back(x);
    w.push_back(0.1 + s.uniform());
    total += w.back();
  }
  for (auto& v : w) v /= total;
  w.back() = 1.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) w.back() -= w[k];
  return EmpiricalMeasure(atoms, w);
}

}  // namespace

TEST_CASE("Fortet-Mourier worked examples") {
  const auto a = EmpiricalMeasure::dirac(make_state(0.0, 0));
  CHECK(fortet_mourier(a, a, 1.0) == 0.0);
  CHECK(fortet_mourier(a, EmpiricalMeasure::dirac(make_state(1.0, 0)), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fortet_mourier(a, EmpiricalMeasure::dirac(make_state(5.0, 0)), 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fortet_mourier(a, EmpiricalMeasure::dirac(make_state(0.0, 1)), 3.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fortet_mourier(a, EmpiricalMeasure::dirac(make_state(0.5, 1)), 1.0) == doctest::Approx(1.5).epsilon(1e-12));
  // min(a, 2) over a sweep.
  for (double d : {0.01, 0.3, 1.7, 1.99, 2.0, 2.5, 9.0})
    CHECK(fortet_mourier(a, EmpiricalMeasure::dirac(make_state(d, 0)), 1.0) ==
          doctest::Approx(std::min(d, 2.0)).epsilon(1e-12));
}

TEST_CASE("Fortet-Mourier matches a dense LP oracle") {
  SeedStream s(1, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const int flows = 1 + trial % 3;
    const int dim = trial % 4 == 3 ? 2 : 1;
    const double c = trial % 2 ? 1.0 : 1.5;
    const double spread = trial % 5 == 0 ? 6.0 : 2.0;
    const auto a = random_measure(s, 3 + trial % 5, flows, dim, spread);
    const auto b = random_measure(s, 2 + trial % 4, flows, dim, spread);
    CAPTURE(trial);
    CHECK(std::abs(fortet_mourier(a, b, c) - fm_oracle(a, b, c)) < 1e-9);
  }
  // Two-dimensional atoms in two flows.
  const EmpiricalMeasure p({state2(0, 0, 0), state2(1, 1, 1)}, {0.5, 0.5});
  const EmpiricalMeasure q({state2(0.5, 0, 0), state2(1, 1.2, 0)}, {0.25, 0.75});
  CHECK(std::abs(fortet_mourier(p, q, 1.0) - fm_oracle(p, q, 1.0)) < 1e-9);
}

TEST_CASE("Fortet-Mourier is a pseudometric") {
  SeedStream s(2, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_measure(s, 40, 2, 1, 3.0);
    const auto b = random_measure(s, 40, 2, 1, 3.0);
    const auto c = random_measure(s, 40, 2, 1, 3.0);
    const double ab = fortet_mourier(a, b, 1.0), ba = fortet_mourier(b, a, 1.0);
    CHECK(std::abs(ab - ba) < 1e-12);
    CHECK(fortet_mourier(a, c, 1.0) <= ab + fortet_mourier(b, c, 1.0) + 1e-9);
    CHECK(ab <= 2.0 + 1e-12);
  }
}

TEST_CASE("support cap") {
  SeedStream s(3, 0);
  const auto big = random_measure(s, 1500, 1, 1, 3.0);
  const auto other = random_measure(s, 1500, 1, 1, 3.0);
  try {
    fortet_mourier(big, other, 1.0);
    FAIL("expected SupportTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SupportTooLarge);
  }
  // Shared atoms are merged before the cap applies.
  CHECK(fortet_mourier(big, big, 1.0) == 0.0);
}

TEST_CASE("empirical measure basics and JSON lines") {
  const EmpiricalMeasure mu({make_state(1.0, 0), make_state(2.0, 1), make_state(1.0, 0)}, {0.25, 0.5, 0.25});
  const auto y = Observable::coordinate(0, 12.0);
  CHECK(mu.integrate(y) == doctest::Approx(1.5));
  CHECK(mu.merged().size() == 2);
  std::stringstream io;
  mu.write_jsonl(io);
  const auto back = EmpiricalMeasure::read_jsonl(io);
  CHECK(back.size() == 3);
  CHECK(back.atom(1) == mu.atom(1));
  CHECK(back.weight(1) == 0.5);
  CHECK_THROWS_AS(EmpiricalMeasure({make_state(1.0)}, {0.9}), Error);
  std::stringstream bad("{\"y\": [1.0], \"i\": 0, \"w\": 1.0}\n");
  CHECK_THROWS_AS(EmpiricalMeasure::read_jsonl(bad), Error);
}

TEST_CASE("apply_P") {
  const auto id = testing::identity_model();
  SeedStream s(4, 0);
  std::vector<HybridState> atoms;
  for (int k = 0; k < 200; ++k) atoms.push_back(make_state(5.0 * s.uniform()));
  const auto mu = EmpiricalMeasure::uniform(atoms);
  const auto pushed = apply_P(id, mu, 3, s);
  CHECK(fortet_mourier(mu, pushed, 1.0) < 1e-12);

  const auto g = load_gallery("relaxation");
  auto cur = EmpiricalMeasure::dirac(make_state(6.0));
  const auto y = make_observable("y", g.model);
  const auto one = apply_P(g.model, cur, 100'000, s);
  const double se = std::sqrt(one.variance(y) / 1e5);
  CHECK(std::abs(one.integrate(y) - g.oracle.one_step_mean_y(0, 6.0)) < 3.0 * se);
  for (int k = 0; k < 10; ++k) {
    cur = apply_P(g.model, cur, k == 0 ? 50 : 1, s);
    CHECK(std::abs(cur.total_mass() - 1.0) < 1e-12);
  }
}

TEST_CASE("dual_P") {
  const auto g = load_gallery("relaxation");
  SeedStream s(5, 0);
  const auto est = dual_P(g.model, Observable::constant(1.0), make_state(3.0), 100, s);
  CHECK(est.value == 1.0);
  CHECK(est.se == 0.0);
  const auto id = testing::identity_model();
  const auto y = make_observable("y", id);
  CHECK(dual_P(id, y, make_state(2.5), 10, s).value == 2.5);

  const auto det = testing::deterministic_relaxation();
  const auto yd = make_observable("y", det);
  for (double y0 : {0.0, 1.0, 4.0, 11.0}) {
    const auto e = dual_P(det, yd, make_state(y0), 20'000, s);
    const double oracle = integrate([&](double t) { return std::exp(-t) * (0.5 * y0 * std::exp(-t) + 1.0); }, 0, 60);
    CHECK(std::abs(e.value - oracle) <= 3.0 * e.se + 1e-12);
  }
  CHECK_THROWS_AS(dual_P(det, yd, make_state(1.0), 1, s), Error);
}

TEST_CASE("apply_G") {
  const auto g = load_gallery("relaxation");
  const auto y = make_observable("y", g.model);
  CHECK(apply_G(g.model, y, make_state(4.0)) == doctest::Approx(2.0).epsilon(1e-15));
  const auto yq = Observable::custom("y-q", [](const HybridState& x) { return x.y(0); }, 12.0, 1.0);
  CHECK(std::abs(apply_G(g.model, yq, make_state(4.0)) - 2.0) < 1e-9);
  CHECK(apply_G(g.model, Observable::constant(3.5), make_state(4.0)) == 3.5);
  CHECK(std::abs(apply_G(g.model, Observable::custom("k", [](const HybridState&) { return 3.5; }, 3.5, 0.0),
                         make_state(4.0)) -
                 3.5) < 1e-9);

  // Lipschitz bound |Gg|_Lip <= |g|_Lip (lambda L / (lambda - alpha) + L_bar / lambda + c).
  for (const auto& name : gallery_names()) {
    const auto gm = load_gallery(name);
    const auto& k = gm.model.constants;
    for (const auto& oname : {"y", "tanh", "bump", "cos"}) {
      const auto obs = make_observable(oname, gm.model);
      const double bound = obs.lipschitz() * (k.lambda * k.L / (k.lambda - k.alpha) + k.L_bar / k.lambda + k.c);
      SeedStream s(6, 0);
      double worst = 0.0;
      for (int p = 0; p < 300; ++p) {
        const auto a = make_state(12.0 * s.uniform(), static_cast<int>(s.uniform() * gm.model.num_flows()));
        const auto b = make_state(12.0 * s.uniform(), static_cast<int>(s.uniform() * gm.model.num_flows()));
        const double d = rho_c(a, b, k.c);
        if (d == 0.0) continue;
        worst = std::max(worst, std::abs(apply_G(gm.model, obs, a) - apply_G(gm.model, obs, b)) / d);
      }
      CAPTURE(name);
      CAPTURE(oname);
      CHECK(worst <= bound);
    }
  }
}

TEST_CASE("apply_W") {
  auto cfg = testing::base_config();
  cfg["jump_map"] = {{"kind", "affine"}, {"scale", 0.5}, {"theta_coef", {0.0}}, {"offset", {0.0}}};
  const auto m = model_from_json(cfg);
  SeedStream s(7, 0);
  const auto out = apply_W(m, EmpiricalMeasure::dirac(make_state(3.0)), 5, s);
  for (const auto& x : out.atoms()) CHECK(x == make_state(1.5));
  CHECK(std::abs(out.total_mass() - 1.0) < 1e-12);

  const auto g = load_gallery("relaxation");
  const auto w = apply_W(g.model, EmpiricalMeasure::dirac(make_state(2.0)), 100'000, s);
  const auto y = make_observable("y", g.model);
  // E[(y + theta)/2 + 0.2 + h] = 1 + 0.25 + 0.2
  const double oracle = integrate([](double th) { return (2.0 + th) / 2.0 + 0.2; }, 0.0, 1.0);
  CHECK(std::abs(w.integrate(y) - oracle) < 3.0 * std::sqrt(w.variance(y) / 1e5));
}

TEST_CASE("invariant estimates") {
  const auto id = testing::identity_model();
  SeedStream s(8, 0);
  InvariantOptions opt;
  opt.burn_in = 10;
  opt.n_keep = 100;
  const auto x0 = make_state(1.25);
  const auto est = estimate_invariants(id, x0, opt, s);
  CHECK(fortet_mourier(est.mu, EmpiricalMeasure::dirac(x0), 1.0) == 0.0);
  CHECK(fortet_mourier(est.nu_G, EmpiricalMeasure::dirac(x0), 1.0) == 0.0);
  CHECK(est.discrepancy == 0.0);

  // iid-jump: mu_* and nu_* are known in closed form.
  const auto g = load_gallery("iid-jump");
  opt.burn_in = 100;
  opt.n_keep = 20'000;
  const auto e = estimate_invariants(g.model, make_state(0.5), opt, s);
  std::vector<double> mu_y, nu_y, nu_t;
  for (const auto& x : e.mu.atoms()) mu_y.push_back(x.y(0));
  for (const auto& x : e.nu_G.atoms()) nu_y.push_back(x.y(0));
  CHECK(ks_one_sample(mu_y, *g.oracle.mu_star_cdf).passes(0.01));
  CHECK(ks_one_sample(nu_y, *g.oracle.nu_star_cdf).passes(0.01));

  // Correspondence loop: nu W G stays close to nu.
  const auto sub = e.nu_G.subsample(500, s);
  const auto loop = sample_G(g.model, apply_W(g.model, sub, 1, s), 1, s);
  const double dloop = fortet_mourier(loop, sub, 1.0);
  const double floor = fortet_mourier(e.nu_G.subsample(500, s), sub, 1.0);
  CHECK(dloop < 3.0 * floor);
}

TEST_CASE("centering: <G gbar, mu> matches <gbar, nu>") {
  const auto g = load_gallery("relaxation");
  SeedStream s(9, 0);
  InvariantOptions opt;
  opt.burn_in = 1000;
  opt.n_keep = 50'000;
  const auto e = estimate_invariants(g.model, make_state(1.0), opt, s);
  const auto y = make_observable("y", g.model);
  const auto gbar = y.centered(e.nu_time.integrate(y));
  std::vector<double> vals;
  for (const auto& x : e.mu.atoms()) vals.push_back(apply_G(g.model, gbar, x));
  const auto bm = batch_means(vals, 50);
  CHECK(std::abs(bm.mean) < 3.0 * bm.mean_se + 0.01);
}

TEST_CASE("nu estimators converge at the Monte Carlo rate") {
  const auto g = load_gallery("relaxation");
  std::vector<double> ns, ds;
  for (std::size_t n : {62u, 125u, 250u, 500u, 1000u}) {
    std::vector<double> vals;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      SeedStream s(100 + seed, n);
      InvariantOptions opt;
      opt.burn_in = 200;
      opt.n_keep = n;
      vals.push_back(estimate_invariants(g.model, make_state(1.0), opt, s).discrepancy);
    }
    ns.push_back(std::log(static_cast<double>(n)));
    ds.push_back(std::log(testing::sample_mean(vals)));
  }
  const auto fit = fit_line(ns, ds);
  CAPTURE(fit.slope);
  CHECK(std::abs(fit.slope + 0.5) < 0.15);
}

TEST_CASE("ergodicity decay") {
  const auto g = load_gallery("relaxation");
  SeedStream s(10, 0);
  InvariantOptions opt;
  opt.burn_in = 1000;
  opt.n_keep = 20'000;
  const auto inv = estimate_invariants(g.model, make_state(1.0), opt, s);
  DecayOptions dopt;
  dopt.n_steps = 12;
  const auto far = ergodicity_decay(g.model, EmpiricalMeasure::dirac(make_state(11.0)), inv.mu, dopt, s);
  CAPTURE(far.to_json().dump());
  CHECK(far.q < 1.0);
  CHECK(far.r2 > 0.95);
  const auto flat = ergodicity_decay(g.model, inv.mu, inv.mu, dopt, s);
  for (double d : flat.dfm) CHECK(d < 4.0 * flat.noise_floor);

  // Larger supports lower the floor on average.
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SeedStream t(200 + seed, 0);
    small += fortet_mourier(inv.mu.subsample(200, t), inv.mu.subsample(200, t), 1.0);
    large += fortet_mourier(inv.mu.subsample(400, t), inv.mu.subsample(400, t), 1.0);
  }
  CHECK(large < small);
}
