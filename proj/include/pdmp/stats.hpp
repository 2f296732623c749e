#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pdmp {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double variance = 0.0;  // sample variance (n - 1)
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

// Batch-means estimate of the asymptotic variance lim Var(sum x_k) / n, with
// the standard error of the estimate.
struct BatchMeans {
  double variance = 0.0;
  double variance_se = 0.0;
  double mean = 0.0;
  double mean_se = 0.0;
  std::size_t batches = 0;
  std::size_t batch_size = 0;
};

BatchMeans batch_means(std::span<const double> xs, std::size_t n_batches);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  std::size_t n = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Fit y_n ~ A q^n by least squares on log y over the given indices.
struct GeometricFit {
  double rate = 1.0;   // q
  double prefactor = 0.0;  // A
  double r2 = 0.0;
  std::size_t points = 0;
};

GeometricFit fit_geometric(std::span<const double> n, std::span<const double> y);

double median(std::vector<double> xs);
double quantile(std::vector<double> xs, double q);

// Kolmogorov limiting tail P(K > t).
double kolmogorov_tail(double t);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool passes(double level) const { return p_value > level; }
};

KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace pdmp
