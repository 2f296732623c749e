#pragma once

#include "pdmp/measure.hpp"
#include "pdmp/model.hpp"
#include "pdmp/observable.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/simulate.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pdmp {

// sqrt(2 x ln ln x) for x > e, else 0.
double lil_normalizer(double x);

// s_n(g) = sum_{i<n} g(X_i) / sqrt(2 n ln ln n), and 0 for n <= e.
double s_discrete(std::span<const double> values, std::size_t n);
inline double s_discrete(std::span<const double> values) { return s_discrete(values, values.size()); }

// g with g_bar = g - <g, nu_*>, where the center is a time average along a
// stationary stretch. The embedded-chain center <Gg, mu_*> is kept alongside
// for the consistency check.
struct CenteredObservable {
  Observable base;
  Observable gbar;
  double center = 0.0;       // <g, nu_*>
  double center_se = 0.0;
  double center_G = 0.0;     // <Gg, mu_*>
  double center_G_se = 0.0;
  double sample_variance = 0.0;  // of g over the nu_* sample
  EmpiricalMeasure mu_star;      // embedded states after burn-in
  HybridState last;              // where the centering chain stopped

  bool consistent() const;   // centers agree within combined 3 SE
  bool nonconstant() const { return sample_variance > 0.0; }
  nlohmann::json to_json() const;
};

struct CenteringOptions {
  std::size_t burn_in = 10'000;
  std::size_t n_steps = 200'000;
  std::size_t n_batches = 50;
  // Size of the stored mu_* sample (evenly thinned).
  std::size_t keep = 20'000;
};

CenteredObservable center_observable(const ModelSpec& model, const Observable& g, const HybridState& x0,
                                     const CenteringOptions& options, SeedStream& stream);

// s(g)(t) = int_0^t g(X(s)) ds / sqrt(2 t ln ln t), and 0 for t <= e.
double s_continuous(const ContinuousPath& path, const Observable& gbar, double t);

// Z_{k+1} = int_0^{dtau_{k+1}} gbar(S(s, Y_k), xi_k) ds - G gbar(X_k) / lambda
double martingale_increment(const ModelSpec& model, const Observable& gbar, const HybridState& x, double dtau);

struct MartingaleSeries {
  std::vector<double> M;  // M_0 = 0, ..., M_n
  std::vector<double> Z;  // Z[k] holds Z_{k+1}
};

MartingaleSeries martingale_series(const ModelSpec& model, const EmbeddedPath& path, const Observable& gbar);

struct SigmaEstimate {
  double sigma = 0.0;
  double sigma_se = 0.0;
  double sigma2 = 0.0;
  double sigma2_se = 0.0;
  nlohmann::json to_json() const;
};

SigmaEstimate sigma_from_variance(double sigma2, double sigma2_se);

struct SeriesOptions {
  std::size_t max_lag = 200;
  double tail_fraction = 0.05;
  // Sub-chains used for the standard error of the truncated series.
  std::size_t groups = 10;
};

struct EmbeddedSigma {
  SigmaEstimate batch;        // batch means of G gbar(X_k)
  SigmaEstimate series;       // truncated autocovariance series
  bool series_ok = false;     // false when the series was refused
  std::string series_error;
  std::size_t lag = 0;        // truncation K
  double decay_rate = 0.0;    // fitted |gamma_k| rate
  bool agree = false;         // 2-SE intervals overlap
  nlohmann::json to_json() const;
};

// sigma(G gbar) from a chain of chain_len steps started at x_start (assumed
// stationary). The series cross-check is computed separately and may throw
// SeriesNotDecaying; estimate_sigma_embedded records that instead.
EmbeddedSigma estimate_sigma_embedded(const ModelSpec& model, const Observable& gbar, const HybridState& x_start,
                                      std::size_t chain_len, std::size_t n_batches, SeedStream& stream,
                                      const SeriesOptions& series = {});

struct SeriesResult {
  SigmaEstimate estimate;
  std::size_t lag = 0;
  double decay_rate = 0.0;
};
SeriesResult sigma2_series(std::span<const double> h, const SeriesOptions& options = {});

// sigma~(gbar) = sqrt(E_{mu_*} Z_1^2) from n_mc starts drawn from mu_star.
struct SigmaTilde {
  SigmaEstimate estimate;
  double max_z2 = 0.0;
  double cap = 0.0;  // 6 |gbar|^2 / lambda^2
  nlohmann::json to_json() const;
};
SigmaTilde estimate_sigma_tilde(const ModelSpec& model, const Observable& gbar, const EmpiricalMeasure& mu_star,
                                std::size_t n_mc, SeedStream& stream);

// sqrt(lambda) (sigma_embedded / lambda + sigma_tilde)
double sigma_bar(double sigma_embedded, double sigma_tilde, double lambda);

// lim Var(int_0^t gbar(X(s)) ds) / t, estimated directly as lambda times the
// batch-means variance of the segment integrals F(gbar)(X_k, dtau_{k+1}).
// Unlike sigma_bar^2 this keeps the cross term between M_n and the G-sum.
SigmaEstimate estimate_time_variance(const ModelSpec& model, const Observable& gbar, const HybridState& x_start,
                                     std::size_t chain_len, std::size_t n_batches, SeedStream& stream);

struct LilOptions {
  // Steps discarded at the start of each replica.
  std::size_t burn_in = 1'000;
  // Jump-count horizon for the per-n moment tracking (h_n^2, Heyde-Scott sums).
  std::size_t n_track = 4096;
  // Envelope window [window * T, T].
  double window = 0.1;
  // Points per segment at which |I2| is evaluated inside the window.
  std::size_t i2_grid = 4;
  // Estimator sizes.
  std::size_t sigma_chain = 2'000'000;
  std::size_t sigma_batches = 1'000;
  std::size_t tilde_mc = 200'000;
  // Keep the full Z series of replica 0 and every checkpoint trace.
  bool full_traces = false;
};

struct CheckpointTrace {
  double t = 0.0;
  std::size_t N = 0;
  double s = 0.0;          // s(gbar)(t)
  double s_G = 0.0;        // s_{N_t}(G gbar)
  double I1 = 0.0;
  double I2 = 0.0;
  double I3 = 0.0;
  double prefactor = 0.0;  // sqrt(N ln ln N) / sqrt(t ln ln t)
  double I2_bound = 0.0;   // |gbar|_inf dtau_{N_t + 1} / sqrt(2 N ln ln N)
};

struct ReplicaTrace {
  std::vector<CheckpointTrace> checkpoints;  // ascending t
  double sup_s = 0.0;
  double inf_s = 0.0;
  double max_abs_I2 = 0.0;  // over the window
  bool I2_bound_holds = true;
  double integral = 0.0;    // int_0^T gbar(X(s)) ds
  std::size_t jumps = 0;    // N_T
  std::vector<double> M_checkpoints;  // M_n at the tracked dyadic n
  std::vector<double> Z;              // replica 0 under full_traces
};

struct LilReport {
  std::string model_hash;
  std::string observable;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::size_t replicas = 0;
  double lambda = 1.0;
  double center = 0.0;
  double sup_norm = 0.0;

  std::vector<double> checkpoint_times;
  std::vector<ReplicaTrace> traces;

  // h_n^2 pooled over replicas at dyadic n.
  std::vector<std::size_t> h_n;
  std::vector<double> h2;
  std::vector<double> h2_se;
  std::size_t n_bar = 0;       // first n with h_n > 0
  double h2_slope = 0.0;       // over the last decade of n
  double h2_slope_se = 0.0;

  // Heyde-Scott partial sums (upsilon = vartheta = 1) up to n_track.
  double hs_ratio = 0.0;       // pooled sum Z_l^2 / h_n^2 at n_track
  double hs_sum4 = 0.0;
  double hs_sum4_tail = 0.0;   // share contributed by the second half
  double hs_sum1 = 0.0;
  double hs_sum1_tail = 0.0;

  double z2_mean = 0.0;
  double z2_cap = 0.0;
  double zr_mean = 0.0;        // pooled E|Z|^{2+r}
  double zr_bound = 0.0;       // kappa |gbar|^{2+r} (E dtau^{2+r} + lambda^{-(2+r)})

  EmbeddedSigma sigma_embedded;
  SigmaTilde sigma_tilde;
  double sigma_bar = 0.0;
  double sigma_bar_se = 0.0;

  double renewal_rate = 0.0;        // mean N_T / T
  double prefactor = 0.0;           // mean prefactor at T
  double max_abs_I2 = 0.0;          // over replicas and the window
  bool I2_bound_holds = true;
  double sup_s = 0.0;               // median over replicas
  double inf_s = 0.0;
  double normalized_sup = 0.0;      // sup_s / sigma_bar

  double clt_variance = 0.0;        // cross-replica Var(T^{-1/2} int_0^T gbar)
  double clt_variance_se = 0.0;
  double clt_ratio = 0.0;           // clt_variance / sigma_bar^2
  SigmaEstimate time_variance;      // see estimate_time_variance
  double clt_ratio_direct = 0.0;    // clt_variance / time_variance

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

LilReport lil_diagnostics(const ModelSpec& model, const CenteredObservable& g, double horizon, std::size_t n_replicas,
                          SeedStream& stream, const LilOptions& options = {});

}  // namespace pdmp
