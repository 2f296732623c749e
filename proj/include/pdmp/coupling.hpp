#pragma once

#include "pdmp/model.hpp"
#include "pdmp/observable.hpp"
#include "pdmp/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

namespace pdmp {

// ((x1, t), (x2, t)) with the shared inter-jump time, plus zeta = 1 when the
// last move came from the coupled part Q and 0 when it came from the residual.
// zeta is -1 before the first move.
struct CoupledState {
  HybridState x1;
  HybridState x2;
  double dtau = 0.0;
  int zeta = -1;
};

// One move of the coupled kernel Q + R. Shared t ~ Exp(lambda) and h ~ nu^eps;
// theta and j are accepted into the coupled move by min-ratio tests. On a
// rejection the first component keeps its own draw and the second is
// resampled from its residual law, so each marginal is exactly Pi.
CoupledState coupled_step(const ModelSpec& model, const CoupledState& s, SeedStream& stream);

// F = {i1 = i2} u {V(x1) + V(x2) < 4b / (1 - a)}.
struct CouplingSetF {
  double a = 0.5;
  double b = 1.0;
  Point y_bar;

  double threshold() const { return 4.0 * b / (1.0 - a); }
  double lyapunov_sum(const HybridState& x1, const HybridState& x2) const;
  bool contains(const HybridState& x1, const HybridState& x2) const;
  // The condition that defines rho: in F and V(x1) + V(x2) below the threshold.
  bool hit(const HybridState& x1, const HybridState& x2) const;
};

class CoupledPath {
 public:
  CoupledPath(const HybridState& x1, const HybridState& x2, double c);
  void push(const CoupledState& s);

  std::size_t steps() const { return states_.size() - 1; }
  const CoupledState& state(std::size_t n) const { return states_[n]; }
  double distance(std::size_t n) const { return dist_[n]; }
  const std::vector<double>& distances() const { return dist_; }

  // First n >= N with hit(); nullopt when not reached.
  std::optional<std::size_t> hitting_time(const CouplingSetF& F, std::size_t N = 1) const;
  // Proxy for the eventual-coupling time: last index with zeta = 0, plus one.
  std::size_t tau_hat() const;
  double coupled_fraction() const;

  // JSON-lines {n, y1, i1, y2, i2, dtau, zeta, dist}, one-based indices.
  void write_jsonl(std::ostream& out) const;

 private:
  double c_;
  std::vector<CoupledState> states_;
  std::vector<double> dist_;
};

CoupledPath simulate_coupled(const ModelSpec& model, const HybridState& x1, const HybridState& x2, std::size_t n,
                             SeedStream& stream);

// Mean rho_c distance over replicas, with a log-linear fit over the points
// above rel_floor * mean[0].
struct DistanceDecay {
  std::vector<double> mean;
  std::vector<double> se;
  double q = 1.0;
  double r2 = 0.0;
  std::size_t fit_points = 0;
  nlohmann::json to_json() const;
};

DistanceDecay coupled_distance_decay(const ModelSpec& model, const HybridState& x1, const HybridState& x2,
                                     std::size_t n_steps, std::size_t n_paths, std::uint64_t seed,
                                     double rel_floor = 1e-12);

struct BConditionOptions {
  std::size_t mc_per_probe = 2000;
  std::size_t b5_paths = 500;
  std::size_t b5_max_steps = 1000;
  std::vector<double> gammas = {1.0, 0.99, 0.95, 0.9, 0.8, 0.7, 0.5};
};

struct BProbe {
  HybridState x1;
  HybridState x2;
};

std::vector<BProbe> make_b_probes(const ModelSpec& model, std::size_t n, SeedStream& stream);

// Numeric evidence for (B0)-(B5); returns a JSON report with one entry per
// condition and the fitted constants a, b, beta, l.
nlohmann::json check_B_conditions(const ModelSpec& model, const std::vector<BProbe>& probes,
                                  const BConditionOptions& options, SeedStream& stream);

struct GapReport {
  std::vector<double> gap;  // E|Z1_{n+1} - Z2_{n+1}|, n = 0..n_max-1
  std::vector<double> se;
  double q = 1.0;
  double r2 = 0.0;
  std::size_t fit_points = 0;
  double partial_sum = 0.0;
  double tail_estimate = 0.0;
  double tail_ratio = 1.0;
  double cap = 0.0;  // 4 sqrt(6) |gbar|_inf / lambda
  bool cap_respected = true;
  nlohmann::json to_json() const;
};

// Along coupled paths, Z^k_{n+1} = int_0^{dtau_{n+1}} gbar(S(s, Y^k_n)) ds - Gbar(X^k_n) / lambda.
GapReport coupled_increment_gap(const ModelSpec& model, const HybridState& x1, const HybridState& x2,
                                const Observable& gbar, std::size_t n_max, std::size_t n_paths, std::uint64_t seed,
                                double rel_floor = 1e-12);

}  // namespace pdmp
