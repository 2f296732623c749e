#include "support.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/gallery.hpp"
#include "pdmp/path_io.hpp"
#include "pdmp/quadrature.hpp"
#include "pdmp/simulate.hpp"
#include "pdmp/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

using namespace pdmp;

TEST_CASE("identity dynamics never move") {
  const auto m = testing::identity_model();
  SeedStream s(1, 0);
  const auto x0 = make_state(3.5);
  for (int k = 0; k < 100; ++k) {
    const auto tr = step(m, x0, s);
    CHECK(tr.state == x0);
    CHECK(tr.dtau > 0.0);
  }
  const auto path = simulate_embedded(m, x0, 200, s);
  for (std::size_t k = 0; k <= path.steps(); ++k) CHECK(path.state(k) == x0);
  const ContinuousPath cp(m, path);
  for (double t : {0.0, 0.3, 7.7, 50.0}) CHECK(cp.at(t) == x0);
}

TEST_CASE("hand-composed deterministic relaxation step") {
  const auto m = testing::deterministic_relaxation();
  SeedStream s(2, 0);
  const auto next = jump_after(m, make_state(4.0), std::log(2.0), s);
  CHECK(next.y(0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("one-step mean matches quadrature") {
  const auto m = testing::deterministic_relaxation();
  SeedStream s(3, 0);
  const double y0 = 6.0;
  const int n = 100'000;
  std::vector<double> ys(n);
  for (auto& y : ys) y = step(m, make_state(y0), s).state.y(0);
  const double oracle = integrate([&](double t) { return std::exp(-t) * (0.5 * y0 * std::exp(-t) + 1.0); }, 0.0, 60.0);
  CHECK(std::abs(testing::sample_mean(ys) - oracle) < 3.0 * std::sqrt(testing::sample_var(ys) / n));

  const auto g = load_gallery("relaxation");
  for (auto& y : ys) y = step(g.model, make_state(y0), s).state.y(0);
  CHECK(std::abs(testing::sample_mean(ys) - g.oracle.one_step_mean_y(0, y0)) <
        3.0 * std::sqrt(testing::sample_var(ys) / n));
}

TEST_CASE("embedded path shape") {
  const auto g = load_gallery("two-flow-switch");
  SeedStream s(4, 0);
  const auto x0 = make_state(2.0, 1);
  const auto empty = simulate_embedded(g.model, x0, 0, s);
  CHECK(empty.steps() == 0);
  CHECK(empty.state(0) == x0);
  CHECK(empty.interjump(0) == 0.0);

  const auto path = simulate_embedded(g.model, x0, 20'000, s);
  CHECK(path.steps() == 20'000);
  CHECK(path.jump_time(0) == 0.0);
  std::vector<double> dts, prev_y;
  for (std::size_t k = 1; k <= path.steps(); ++k) {
    CHECK(path.jump_time(k) > path.jump_time(k - 1));
    CHECK(g.model.box.contains(path.state(k).y));
    dts.push_back(path.interjump(k));
    prev_y.push_back(path.y(k - 1));
  }
  CHECK(ks_one_sample(dts, [](double t) { return t <= 0 ? 0.0 : 1.0 - std::exp(-2.0 * t); }).passes(0.01));
  // Inter-jump times do not depend on the state they leave from.
  const auto fit = fit_line(prev_y, dts);
  const double corr = std::sqrt(fit.r2);
  CHECK(corr < 3.0 / std::sqrt(double(dts.size())));
}

TEST_CASE("same seed, same path") {
  const auto g = load_gallery("two-flow-switch");
  SeedStream a(9, 2), b(9, 2);
  const auto p1 = simulate_embedded(g.model, make_state(1.0), 1000, a);
  const auto p2 = simulate_embedded(g.model, make_state(1.0), 1000, b);
  for (std::size_t k = 0; k <= 1000; ++k) {
    CHECK(p1.state(k) == p2.state(k));
    CHECK(p1.interjump(k) == p2.interjump(k));
  }
}

TEST_CASE("continuous path evaluation") {
  const auto g = load_gallery("relaxation");
  SeedStream s(5, 0);
  const ContinuousPath cp(g.model, simulate_embedded(g.model, make_state(8.0), 500, s));
  const auto& path = cp.embedded();
  for (std::size_t n = 0; n < path.steps(); ++n) {
    CHECK(cp.at(path.jump_time(n)) == path.state(n));
    const double sdt = 0.5 * path.interjump(n + 1);
    CHECK(cp.at(path.jump_time(n) + sdt).y(0) == doctest::Approx(path.y(n) * std::exp(-sdt)).epsilon(1e-12));
    // Left limit at tau_{n+1} is the pre-jump flow value.
    const double before = std::nextafter(path.jump_time(n + 1), 0.0);
    if (before > path.jump_time(n))
      CHECK(cp.at(before).y(0) == doctest::Approx(path.y(n) * std::exp(-path.interjump(n + 1))).epsilon(1e-9));
  }
  CHECK_THROWS_AS(cp.at(cp.horizon()), Error);
  CHECK_THROWS_AS(cp.at(-1.0), Error);
}

TEST_CASE("renewal counter") {
  const auto m = testing::identity_model();
  EmbeddedPath path(make_state(0.0));
  for (double dt : {1.0, 1.5, 0.2}) path.push(make_state(0.0), dt);
  const ContinuousPath cp(m, path);
  CHECK(cp.renewal_count(2.6) == 2);
  for (std::size_t k = 0; k < 3; ++k) CHECK(cp.renewal_count(path.jump_time(k)) == k);
  CHECK_THROWS_AS(cp.renewal_count(2.7), Error);

  const auto g = load_gallery("two-flow-switch");
  SeedStream s(6, 0);
  const double T = 1e5;
  const ContinuousPath long_path(g.model, simulate_until(g.model, make_state(1.0), T, s));
  CHECK(long_path.horizon() > T);
  CHECK(std::abs(long_path.renewal_count(T) / T - 2.0) < 0.02);
}

TEST_CASE("path integrals") {
  const auto g = load_gallery("relaxation");
  SeedStream s(7, 0);
  const ContinuousPath cp(g.model, simulate_embedded(g.model, make_state(3.0), 300, s));
  const auto one = Observable::constant(1.0);
  const auto y = make_observable("y", g.model);
  CHECK(cp.integral(one, 0.7, 41.3) == doctest::Approx(41.3 - 0.7).epsilon(1e-13));
  const auto& path = cp.embedded();
  const double T = path.interjump(1);
  CHECK(cp.integral(y, 0.0, T) == doctest::Approx(3.0 * (1.0 - std::exp(-T))).epsilon(1e-13));
  const double a = 0.3, b = 0.5 * cp.horizon(), c = 0.9 * cp.horizon();
  CHECK(std::abs(cp.integral(y, a, b) + cp.integral(y, b, c) - cp.integral(y, a, c)) < 1e-10);

  // Quadrature path agrees with the closed form.
  const auto tanh_g = make_observable("tanh", g.model);
  const auto as_custom = Observable::custom("tanh-q", [&](const HybridState& x) { return tanh_g(x); },
                                            tanh_g.sup_norm(), tanh_g.lipschitz());
  CHECK(std::abs(cp.integral(tanh_g, a, c) - cp.integral(as_custom, a, c)) < 1e-8);
  const auto yq = Observable::custom("y-q", [&](const HybridState& x) { return x.y(0); }, 12.0, 1.0);
  CHECK(std::abs(cp.integral(y, a, c) - cp.integral(yq, a, c)) < 1e-8);
}

TEST_CASE("escaping the state space is an error") {
  auto cfg = testing::base_config();
  cfg["state_space"] = {{"lo", {0.0}}, {"hi", {12.0}}};
  cfg["jump_map"] = {{"kind", "affine"}, {"scale", 1.0}, {"theta_coef", {0.0}}, {"offset", {5.0}}};
  const auto m = model_from_json(cfg);
  SeedStream s(1, 1);
  try {
    step(m, make_state(10.0), s);
    FAIL("expected StateEscapedY");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StateEscapedY);
  }
}

TEST_CASE("gallery oracle closed forms agree with generic machinery") {
  for (const auto& name : gallery_names()) {
    const auto g = load_gallery(name);
    const auto y = make_observable("y", g.model);
    SeedStream s(10, 0);
    for (int k = 0; k < 100; ++k) {
      const int i = static_cast<int>(s.uniform() * g.model.num_flows());
      const double y0 = 12.0 * s.uniform(), T = 4.0 * s.uniform();
      const auto x = make_state(y0, i);
      CHECK(std::abs(g.oracle.flow(i, T, y0) - g.model.flow(i, T, x.y)(0)) < 1e-12);
      const double quad = integrate([&](double t) { return g.model.flow(i, t, x.y)(0); }, 0.0, T);
      CHECK(std::abs(g.oracle.segment_y(i, y0, T) - quad) < 1e-9);
      CHECK(std::abs(flow_integral(g.model, y, x, T) - quad) < 1e-9);
    }
  }
}

TEST_CASE("path exports: JSON-lines records and a bit-exact binary round trip") {
  const auto gm = load_gallery("two-flow-switch");
  SeedStream stream(17, 0);
  const auto path = simulate_embedded(gm.model, make_state(0.3, 1), 250, stream);

  std::stringstream lines;
  write_path_jsonl(path, lines);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec.at("n").get<std::size_t>() == count);
    CHECK(rec.at("tau").get<double>() == path.jump_time(count));
    CHECK(rec.at("y")[0].get<double>() == path.y(count));
    CHECK(rec.at("i").get<int>() == path.flow(count) + 1);
    ++count;
  }
  CHECK(count == 251);

  std::stringstream bin;
  write_path_binary(path, bin, {{"schema", "test"}});
  const auto back = read_path_binary(bin);
  CHECK(back.header.at("schema") == "test");
  REQUIRE(back.path.steps() == path.steps());
  for (std::size_t k = 0; k <= path.steps(); ++k) {
    CHECK(back.path.y(k) == path.y(k));
    CHECK(back.path.flow(k) == path.flow(k));
    CHECK(back.path.jump_time(k) == path.jump_time(k));
  }

  std::stringstream junk("not a path");
  CHECK_THROWS(read_path_binary(junk));
}
