#include "support.hpp"

#include "pdmp/coupling.hpp"
#include "pdmp/errors.hpp"
#include "pdmp/gallery.hpp"
#include "pdmp/simulate.hpp"
#include "pdmp/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pdmp;

TEST_CASE("diagonal start stays on the diagonal") {
  for (const auto& name : gallery_names()) {
    const auto g = load_gallery(name);
    SeedStream s(1, 0);
    const auto x = make_state(3.0, g.model.num_flows() - 1);
    const auto path = simulate_coupled(g.model, x, x, 500, s);
    for (std::size_t n = 1; n <= path.steps(); ++n) {
      CHECK(path.state(n).x1 == path.state(n).x2);
      CHECK(path.state(n).zeta == 1);
      CHECK(path.distance(n) == 0.0);
    }
    CHECK(path.tau_hat() == 0);
    CHECK(path.coupled_fraction() == 1.0);
  }
}

TEST_CASE("coupled moves share t, theta, h and j") {
  const auto g = load_gallery("two-flow-switch");
  SeedStream s(2, 0);
  CoupledState st{make_state(4.0, 0), make_state(4.3, 0), 0.0, -1};
  int coupled = 0;
  for (int k = 0; k < 2000; ++k) {
    const auto nx = coupled_step(g.model, st, s);
    if (nx.zeta == 1) {
      ++coupled;
      CHECK(nx.x1.flow == nx.x2.flow);
      // Same theta and h: the images differ only through the pre-jump states.
      const Point y1 = g.model.flow(st.x1.flow, nx.dtau, st.x1.y);
      const Point y2 = g.model.flow(st.x2.flow, nx.dtau, st.x2.y);
      CHECK(std::abs((nx.x1.y - nx.x2.y)(0) - 0.5 * (y1 - y2)(0)) < 1e-12);
    }
  }
  CHECK(coupled > 1000);
}

TEST_CASE("coupled components are marginally Pi-distributed") {
  for (const auto& name : {"relaxation", "two-flow-switch"}) {
    const auto g = load_gallery(name);
    const auto x1 = make_state(2.0, 0), x2 = make_state(7.0, g.model.num_flows() - 1);
    SeedStream s(3, 0), plain(3, 1);
    const int n = 20'000;
    std::vector<double> c1, c2, p1, p2, i1, i2, pi1, pi2;
    for (int k = 0; k < n; ++k) {
      const auto nx = coupled_step(g.model, {x1, x2, 0.0, -1}, s);
      c1.push_back(nx.x1.y(0));
      c2.push_back(nx.x2.y(0));
      i1.push_back(nx.x1.flow + nx.dtau);
      i2.push_back(nx.x2.flow + nx.dtau);
      const auto a = step(g.model, x1, plain), b = step(g.model, x2, plain);
      p1.push_back(a.state.y(0));
      p2.push_back(b.state.y(0));
      pi1.push_back(a.state.flow + a.dtau);
      pi2.push_back(b.state.flow + b.dtau);
    }
    CAPTURE(name);
    CHECK(ks_two_sample(c1, p1).passes(0.01));
    CHECK(ks_two_sample(c2, p2).passes(0.01));
    CHECK(ks_two_sample(i1, pi1).passes(0.01));
    CHECK(ks_two_sample(i2, pi2).passes(0.01));
  }
}

TEST_CASE("coupled distance contracts") {
  const auto g = load_gallery("relaxation");
  const auto decay = coupled_distance_decay(g.model, make_state(1.0), make_state(9.0), 60, 2000, 4);
  CHECK(decay.q < 1.0);
  CHECK(decay.r2 > 0.95);
  // Same index and y-independent jump law: the distance shrinks by e^{-t}/2,
  // so E dist_n = 8 / 4^n.
  CHECK(decay.q == doctest::Approx(0.25).epsilon(0.05));
  const auto diag = coupled_distance_decay(g.model, make_state(3.0), make_state(3.0), 50, 100, 4);
  for (double d : diag.mean) CHECK(d == 0.0);

  const auto two = load_gallery("two-flow-switch");
  const auto d2 = coupled_distance_decay(two.model, make_state(0.5, 0), make_state(8.0, 1), 60, 2000, 5);
  CHECK(d2.q < 1.0);
  CHECK(d2.r2 > 0.95);
}

TEST_CASE("coupling quality falls with starting distance") {
  const auto g = load_gallery("two-flow-switch");
  std::vector<double> freq;
  for (double d : {0.05, 0.5, 2.0, 6.0}) {
    SeedStream s(6, 0);
    int ones = 0;
    const int n = 20'000;
    for (int k = 0; k < n; ++k) ones += coupled_step(g.model, {make_state(1.0), make_state(1.0 + d), 0.0, -1}, s).zeta;
    freq.push_back(ones / double(n));
  }
  for (std::size_t k = 1; k < freq.size(); ++k) CHECK(freq[k] <= freq[k - 1] + 0.01);
  CHECK(freq.front() > freq.back());
}

TEST_CASE("coupling set F and hitting times") {
  CouplingSetF F{0.5, 1.0, Point::Zero(1)};
  CHECK(F.threshold() == 8.0);
  CHECK(F.contains(make_state(10.0, 0), make_state(20.0, 0)));
  CHECK_FALSE(F.contains(make_state(10.0, 0), make_state(20.0, 1)));
  CHECK(F.contains(make_state(1.0, 0), make_state(2.0, 1)));
  CHECK_FALSE(F.hit(make_state(10.0, 0), make_state(20.0, 0)));

  const auto g = load_gallery("two-flow-switch");
  CouplingSetF G{0.3, 1.0, g.model.constants.y_bar};
  std::size_t unfinished = 0;
  for (std::uint64_t p = 0; p < 500; ++p) {
    SeedStream s(7, p);
    const auto path = simulate_coupled(g.model, make_state(11.0, 0), make_state(0.5, 1), 1000, s);
    const auto rho = path.hitting_time(G);
    if (!rho) ++unfinished;
    if (rho) {
      CHECK(*rho >= 1);
      CHECK(G.hit(path.state(*rho).x1, path.state(*rho).x2));
      const auto rho_n = path.hitting_time(G, 10);
      REQUIRE(rho_n);
      CHECK(*rho_n >= 10);
    }
  }
  CHECK(unfinished < 5);
}

TEST_CASE("coupled path export") {
  const auto g = load_gallery("two-flow-switch");
  SeedStream s(8, 0);
  const auto path = simulate_coupled(g.model, make_state(1.0, 0), make_state(2.0, 1), 5, s);
  std::stringstream out;
  path.write_jsonl(out);
  std::string line;
  int count = 0;
  while (std::getline(out, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec["n"] == count);
    for (const auto* key : {"y1", "i1", "y2", "i2", "dtau", "zeta", "dist"}) CHECK(rec.contains(key));
    if (count == 0) CHECK(rec["zeta"].is_null());
    ++count;
  }
  CHECK(count == 6);
  CHECK_THROWS_AS(simulate_coupled(g.model, make_state(1.0), make_state(1.0), 0, s), Error);
}

TEST_CASE("B-condition report") {
  const auto g = load_gallery("relaxation");
  SeedStream s(9, 0);
  auto probes = make_b_probes(g.model, 24, s);
  probes.push_back({make_state(2.0), make_state(2.0)});
  BConditionOptions opt;
  opt.mc_per_probe = 500;
  opt.b5_paths = 200;
  const auto report = check_B_conditions(g.model, probes, opt, s);
  CHECK(report["B1"]["pass"] == true);
  CHECK(report["B1"]["a"].get<double>() < 1.0);
  CHECK(report["B1"].contains("b"));
  bool zero_skipped = false;
  for (const auto& sk : report["B2"]["skipped"]) zero_skipped |= sk["reason"] == "zero distance";
  CHECK(zero_skipped);
  CHECK(report["B2"]["pass"] == true);
  CHECK(report["B3"]["pass"] == true);
  CHECK(report["B5"]["grid"][0]["gamma"] == 1.0);
  CHECK(report["B5"]["grid"][0]["uninformative"] == true);
  CHECK(report["B0"]["heuristic"] == true);

  BConditionOptions none;
  none.mc_per_probe = 1;
  CHECK_THROWS_AS(check_B_conditions(g.model, probes, none, s), Error);
}

TEST_CASE("zeta frequencies on a distance ladder give a finite l") {
  const auto g = load_gallery("two-flow-switch");
  SeedStream s(10, 0);
  std::vector<BProbe> probes;
  for (double d : {0.01, 0.05, 0.1, 0.3}) probes.push_back({make_state(2.0), make_state(2.0 + d)});
  BConditionOptions opt;
  opt.mc_per_probe = 4000;
  opt.b5_paths = 50;
  const auto report = check_B_conditions(g.model, probes, opt, s);
  const double l = report["B4"]["l"];
  CHECK(std::isfinite(l));
  // zeta frequency >= 1 - l rho at every probe, by construction of l; and l is
  // of the order of the Lipschitz constants of p and pi.
  CHECK(l < 5.0 * (g.model.constants.L_p + g.model.constants.L_pi));
}

TEST_CASE("increment gap") {
  const auto g = load_gallery("relaxation");
  const auto y = make_observable("y", g.model);
  const auto gbar = y.centered(0.6);
  const auto same = coupled_increment_gap(g.model, make_state(2.0), make_state(2.0), gbar, 50, 50, 11);
  for (double v : same.gap) CHECK(v == 0.0);
  const auto gap = coupled_increment_gap(g.model, make_state(1.0), make_state(9.0), gbar, 200, 2000, 12);
  CHECK(gap.q > 0.0);
  CHECK(gap.q < 1.0);
  CHECK(gap.r2 > 0.9);
  CHECK(gap.tail_ratio < 0.01);
  CHECK(gap.cap_respected);
}
