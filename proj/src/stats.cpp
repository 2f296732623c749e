#include "pdmp/stats.hpp"

#include "pdmp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdmp {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
  else comp_ += (v - t) + sum_;
  sum_ = t;
}

MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) return out;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  out.mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  CompensatedSum ss;
  for (double x : xs) ss.add((x - out.mean) * (x - out.mean));
  out.variance = ss.value() / static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(out.variance / static_cast<double>(xs.size()));
  return out;
}

BatchMeans batch_means(std::span<const double> xs, std::size_t n_batches) {
  if (n_batches < 2 || xs.size() < 2 * n_batches)
    fail(ErrorCode::InsufficientSamples, "batch means needs at least two observations per batch and two batches");
  BatchMeans out;
  out.batches = n_batches;
  out.batch_size = xs.size() / n_batches;
  std::vector<double> means(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    CompensatedSum s;
    for (std::size_t k = 0; k < out.batch_size; ++k) s.add(xs[b * out.batch_size + k]);
    means[b] = s.value() / static_cast<double>(out.batch_size);
  }
  const auto ms = mean_se(means);
  out.mean = ms.mean;
  out.mean_se = ms.se;
  out.variance = static_cast<double>(out.batch_size) * ms.variance;
  out.variance_se = out.variance * std::sqrt(2.0 / static_cast<double>(n_batches - 1));
  return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "fit_line: size mismatch");
  LineFit f;
  f.n = x.size();
  if (f.n < 2) return f;
  const double nx = static_cast<double>(f.n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nx;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / nx;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < f.n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (f.n > 2) f.slope_se = std::sqrt(sse / (nx - 2.0) / sxx);
  return f;
}

GeometricFit fit_geometric(std::span<const double> n, std::span<const double> y) {
  std::vector<double> xs, ls;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] > 0.0 && std::isfinite(y[k])) {
      xs.push_back(n[k]);
      ls.push_back(std::log(y[k]));
    }
  }
  GeometricFit g;
  g.points = xs.size();
  if (xs.size() < 2) return g;
  const auto line = fit_line(xs, ls);
  g.rate = std::exp(line.slope);
  g.prefactor = std::exp(line.intercept);
  g.r2 = line.r2;
  return g;
}

double quantile(std::vector<double> xs, double q) {
  require(!xs.empty(), "quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

double kolmogorov_tail(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

// Stephens' finite-sample correction of the limiting distribution.
double ks_p(double d, double n_eff) {
  const double root = std::sqrt(n_eff);
  return kolmogorov_tail((root + 0.12 + 0.11 / root) * d);
}

}  // namespace

KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  require(!xs.empty(), "ks_one_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double f = cdf(xs[k]);
    d = std::max({d, (static_cast<double>(k) + 1.0) / n - f, f - static_cast<double>(k) / n});
  }
  return {d, ks_p(d, n)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p(d, na * nb / (na + nb))};
}

}  // namespace pdmp
