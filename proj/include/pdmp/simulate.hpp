#pragma once

#include "pdmp/model.hpp"
#include "pdmp/observable.hpp"
#include "pdmp/rng.hpp"

#include <cstddef>
#include <vector>

namespace pdmp {

struct Transition {
  HybridState state;
  double dtau = 0.0;
};

// One draw from Pi: dtau ~ Exp(lambda), y' = S_i(dtau, y), theta ~ p(y', .),
// h ~ nu^eps, y'' = w_theta(y') + h, j ~ pi_i.(y'').
Transition step(const ModelSpec& model, const HybridState& x, SeedStream& stream);

// Same kernel with the inter-jump time fixed (the dtau draw is skipped).
HybridState jump_after(const ModelSpec& model, const HybridState& x, double dtau, SeedStream& stream);

// Realization of (X_k, dtau_k), k = 0..n, stored column-wise.
class EmbeddedPath {
 public:
  EmbeddedPath() = default;
  explicit EmbeddedPath(const HybridState& x0);

  void push(const HybridState& x, double dtau);
  void reserve(std::size_t steps);

  // Number of jumps n; the path holds n + 1 states.
  std::size_t steps() const { return flows_.size() - 1; }
  int dim() const { return dim_; }
  HybridState state(std::size_t k) const;
  int flow(std::size_t k) const { return flows_[k]; }
  double y(std::size_t k, int coord = 0) const { return ys_[k * static_cast<std::size_t>(dim_) + coord]; }
  double interjump(std::size_t k) const { return dtau_[k]; }
  double jump_time(std::size_t k) const { return tau_[k]; }
  const std::vector<double>& jump_times() const { return tau_; }
  const std::vector<double>& interjumps() const { return dtau_; }

 private:
  int dim_ = 0;
  std::vector<double> ys_;
  std::vector<int> flows_;
  std::vector<double> dtau_;
  std::vector<double> tau_;
};

EmbeddedPath simulate_embedded(const ModelSpec& model, const HybridState& x0, std::size_t n, SeedStream& stream);

// Simulates until tau_last > t, over-simulating by 1.2 lambda t + 10 sqrt(lambda t)
// jumps up front.
EmbeddedPath simulate_until(const ModelSpec& model, const HybridState& x0, double t, SeedStream& stream);

// int_0^T g(S_i(s, y), i) ds, i.e. F(g)(x, T). Closed form when available,
// adaptive Gauss-Kronrod otherwise.
double flow_integral(const ModelSpec& model, const Observable& g, const HybridState& x, double T,
                     double quad_tol = 1e-10);

// X(t) = (S_{xi_n}(t - tau_n, Y_n), xi_n) on [tau_n, tau_{n+1}).
class ContinuousPath {
 public:
  ContinuousPath(const ModelSpec& model, EmbeddedPath path);

  const EmbeddedPath& embedded() const { return path_; }
  const ModelSpec& model() const { return *model_; }
  double horizon() const { return path_.jump_time(path_.steps()); }

  // N_t = max{n : tau_n <= t}; requires 0 <= t < tau_last.
  std::size_t renewal_count(double t) const;
  HybridState at(double t) const;
  // int_{t0}^{t1} g(X(s)) ds, segment by segment.
  double integral(const Observable& g, double t0, double t1, double quad_tol = 1e-10) const;

 private:
  const ModelSpec* model_;
  EmbeddedPath path_;
};

}  // namespace pdmp
