#pragma once

#include "pdmp/fortet_mourier.hpp"
#include "pdmp/measure.hpp"
#include "pdmp/model.hpp"
#include "pdmp/observable.hpp"
#include "pdmp/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <vector>

namespace pdmp {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// mu P by Monte Carlo: every atom spawns samples_per_atom independent steps.
EmpiricalMeasure apply_P(const ModelSpec& model, const EmpiricalMeasure& mu, std::size_t samples_per_atom,
                         SeedStream& stream);

// P g(x) = E[g(X_1) | X_0 = x].
Estimate dual_P(const ModelSpec& model, const Observable& g, const HybridState& x, std::size_t n_mc,
                SeedStream& stream);

// G g(y, i) = int_0^inf lambda e^{-lambda t} g(S_i(t, y), i) dt. Closed form
// when available, otherwise quadrature truncated where the tail
// |g|_inf e^{-lambda t} drops below quad_tol.
double apply_G(const ModelSpec& model, const Observable& g, const HybridState& x, double quad_tol = 1e-10);

// mu G by sampling t ~ Exp(lambda) and flowing.
EmpiricalMeasure sample_G(const ModelSpec& model, const EmpiricalMeasure& mu, std::size_t samples_per_atom,
                          SeedStream& stream);

// mu W: jump only, (y, i) -> (w_theta(y) + h, j).
EmpiricalMeasure apply_W(const ModelSpec& model, const EmpiricalMeasure& mu, std::size_t samples_per_atom,
                         SeedStream& stream);

struct InvariantOptions {
  std::size_t burn_in = 10'000;
  std::size_t n_keep = 10'000;
  // Supports larger than this are compared on subsamples.
  std::size_t support = 500;
  std::size_t resamples = 5;
};

struct InvariantEstimate {
  EmpiricalMeasure mu;      // embedded chain after burn-in
  EmpiricalMeasure nu_G;    // mu pushed through G
  EmpiricalMeasure nu_time; // X(t) on an even time grid over the same stretch
  double discrepancy = 0.0; // d_FM(nu_G, nu_time)
  std::uint64_t seed = 0;
};

InvariantEstimate estimate_invariants(const ModelSpec& model, const HybridState& x0, const InvariantOptions& options,
                                      SeedStream& stream);

// Median of d_FM over `resamples` pairs of subsamples of at most `support` atoms.
double fortet_mourier_subsampled(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double c,
                                 std::size_t support, std::size_t resamples, SeedStream& stream);

struct DecayOptions {
  std::size_t n_steps = 30;
  std::size_t support = 500;
  std::size_t resamples = 5;
  // Points at or below floor_factor * noise floor are excluded from the fit.
  double floor_factor = 2.0;
  // Points above this are in the regime where d_FM saturates at 2.
  double ceiling = 1.0;
};

struct DecayReport {
  std::vector<double> dfm;  // n = 0..n_steps
  double noise_floor = 0.0;
  double q = 1.0;
  double r2 = 0.0;
  std::size_t fit_first = 0;
  std::size_t fit_last = 0;
  std::size_t fit_points = 0;

  nlohmann::json to_json() const;
};

// d_FM(mu0 P^n, mu_star) for n = 0..n_steps with a log-linear fit of the
// decay. mu0 is propagated as a particle cloud of `support` atoms.
DecayReport ergodicity_decay(const ModelSpec& model, const EmpiricalMeasure& mu0, const EmpiricalMeasure& mu_star,
                             const DecayOptions& options, SeedStream& stream);

}  // namespace pdmp
