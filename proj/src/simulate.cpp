#include "pdmp/simulate.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/quadrature.hpp"
#include "pdmp/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

namespace pdmp {

HybridState jump_after(const ModelSpec& model, const HybridState& x, double dtau, SeedStream& stream) {
  const Point pre = model.flow(x.flow, dtau, x.y);
  const double theta = draw_theta(stream, model, pre);
  const Point h = draw_noise(stream, model);
  assert(model.noise.kind == NoiseSpec::Kind::None || h.norm() < model.noise.epsilon);
  HybridState next{model.jump_map(theta, pre) + h, 0};
  if (!model.box.contains(next.y)) {
    std::ostringstream msg;
    msg << "jump image left Y: y'' = " << next.y.transpose() << " (theta = " << theta << ")";
    fail(ErrorCode::StateEscapedY, msg.str());
  }
  next.flow = draw_switch(stream, model, x.flow, next.y);
  return next;
}

Transition step(const ModelSpec& model, const HybridState& x, SeedStream& stream) {
  const double dtau = draw_interjump(stream, model.lambda());
  return {jump_after(model, x, dtau, stream), dtau};
}

EmbeddedPath::EmbeddedPath(const HybridState& x0) : dim_(static_cast<int>(x0.y.size())) {
  ys_.assign(x0.y.data(), x0.y.data() + dim_);
  flows_.push_back(x0.flow);
  dtau_.push_back(0.0);
  tau_.push_back(0.0);
}

void EmbeddedPath::push(const HybridState& x, double dtau) {
  ys_.insert(ys_.end(), x.y.data(), x.y.data() + dim_);
  flows_.push_back(x.flow);
  dtau_.push_back(dtau);
  tau_.push_back(tau_.back() + dtau);
}

void EmbeddedPath::reserve(std::size_t steps) {
  ys_.reserve((steps + 1) * static_cast<std::size_t>(dim_));
  flows_.reserve(steps + 1);
  dtau_.reserve(steps + 1);
  tau_.reserve(steps + 1);
}

HybridState EmbeddedPath::state(std::size_t k) const {
  HybridState x;
  x.y.resize(dim_);
  std::copy_n(ys_.begin() + static_cast<std::ptrdiff_t>(k * static_cast<std::size_t>(dim_)), dim_, x.y.data());
  x.flow = flows_[k];
  return x;
}

EmbeddedPath simulate_embedded(const ModelSpec& model, const HybridState& x0, std::size_t n, SeedStream& stream) {
  EmbeddedPath path(x0);
  path.reserve(n);
  HybridState x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    auto tr = step(model, x, stream);
    path.push(tr.state, tr.dtau);
    x = std::move(tr.state);
  }
  return path;
}

EmbeddedPath simulate_until(const ModelSpec& model, const HybridState& x0, double t, SeedStream& stream) {
  const double mean_jumps = model.lambda() * std::max(t, 0.0);
  const auto budget = static_cast<std::size_t>(std::ceil(1.2 * mean_jumps + 10.0 * std::sqrt(mean_jumps))) + 1;
  EmbeddedPath path = simulate_embedded(model, x0, budget, stream);
  HybridState x = path.state(path.steps());
  while (!(path.jump_time(path.steps()) > t)) {
    auto tr = step(model, x, stream);
    path.push(tr.state, tr.dtau);
    x = std::move(tr.state);
  }
  return path;
}

double flow_integral(const ModelSpec& model, const Observable& g, const HybridState& x, double T, double quad_tol) {
  if (T <= 0.0) return 0.0;
  const auto& flow = model.flows[x.flow];
  if (auto closed = g.segment_closed_form(flow, x, T)) return *closed;
  HybridState probe = x;
  return integrate(
      [&](double s) {
        probe.y = flow.apply(s, x.y);
        return g(probe);
      },
      0.0, T, quad_tol);
}

ContinuousPath::ContinuousPath(const ModelSpec& model, EmbeddedPath path) : model_(&model), path_(std::move(path)) {}

std::size_t ContinuousPath::renewal_count(double t) const {
  if (!(t >= 0.0) || !(t < horizon())) {
    std::ostringstream msg;
    msg << "time " << t << " is outside [0, " << horizon() << ")";
    fail(ErrorCode::BeyondHorizon, msg.str());
  }
  const auto& tau = path_.jump_times();
  const auto it = std::upper_bound(tau.begin(), tau.end(), t);
  return static_cast<std::size_t>(it - tau.begin()) - 1;
}

HybridState ContinuousPath::at(double t) const {
  const std::size_t n = renewal_count(t);
  HybridState x = path_.state(n);
  const double s = t - path_.jump_time(n);
  if (s == 0.0) return x;
  x.y = model_->flow(x.flow, s, x.y);
  return x;
}

double ContinuousPath::integral(const Observable& g, double t0, double t1, double quad_tol) const {
  require(t0 <= t1, "integral: t0 must not exceed t1");
  if (t0 == t1) return 0.0;
  const std::size_t n0 = renewal_count(t0);
  const std::size_t n1 = renewal_count(t1);
  // Segment pieces are integrated from their own start so that closed forms
  // apply; the partial first segment is a difference of two such integrals.
  auto piece = [&](std::size_t n, double from, double to) {
    const HybridState x = path_.state(n);
    const double base = path_.jump_time(n);
    return flow_integral(*model_, g, x, to - base, quad_tol) - flow_integral(*model_, g, x, from - base, quad_tol);
  };
  if (n0 == n1) return piece(n0, t0, t1);
  double total = piece(n0, t0, path_.jump_time(n0 + 1));
  for (std::size_t n = n0 + 1; n < n1; ++n)
    total += flow_integral(*model_, g, path_.state(n), path_.interjump(n + 1), quad_tol);
  total += piece(n1, path_.jump_time(n1), t1);
  return total;
}

}  // namespace pdmp
