#include "pdmp/sampler.hpp"

#include "pdmp/errors.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <cassert>
#include <cmath>

namespace pdmp {

double draw_interjump(SeedStream& stream, double lambda) {
  require(lambda > 0.0, "draw_interjump: lambda must be > 0");
  return -std::log(stream.uniform_open()) / lambda;
}

double draw_theta(SeedStream& stream, const ModelSpec& model, const Point& y) {
  const auto& th = model.theta_space;
  const auto& d = model.density;
  switch (d.kind) {
    case JumpDensitySpec::Kind::Uniform:
      if (th.kind == ParameterSpace::Kind::Finite) {
        const auto n = th.atoms.size();
        auto k = static_cast<std::size_t>(stream.uniform() * static_cast<double>(n));
        return th.atoms[k < n ? k : n - 1];
      }
      return th.lo + stream.uniform() * (th.hi - th.lo);
    case JumpDensitySpec::Kind::Beta: {
      const double u = stream.uniform_open();
      return th.lo + (th.hi - th.lo) * boost::math::ibeta_inv(d.beta_a, d.beta_b, u);
    }
    case JumpDensitySpec::Kind::Categorical: {
      const double u = stream.uniform();
      double acc = 0.0;
      for (std::size_t k = 0; k < th.atoms.size(); ++k) {
        acc += d.weights[k];
        if (u < acc) return th.atoms[k];
      }
      return th.atoms.back();
    }
    case JumpDensitySpec::Kind::LinearTilt: {
      const double cap = model.density_cap();
      constexpr long kMaxAttempts = 1'000'000;  // acceptance < 1e-4 is a misconfigured envelope
      for (long attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const double theta = th.lo + stream.uniform() * (th.hi - th.lo);
        const double p = model.jump_density(y, theta);
        if (p > cap * (1.0 + 1e-12))
          fail(ErrorCode::RejectionStall, "jump density exceeds the declared envelope cap");
        if (stream.uniform() * cap < p) return theta;
      }
      fail(ErrorCode::RejectionStall, "theta rejection sampler acceptance rate below 1e-4");
    }
  }
  return th.lo;
}

int draw_switch(SeedStream& stream, const ModelSpec& model, int i, const Point& y) {
  const int m = model.num_flows();
  if (m == 1) return 0;
  double row_buf[kMaxDim];
  std::vector<double> big;
  double* row = row_buf;
  if (m > kMaxDim) {
    big.resize(m);
    row = big.data();
  }
  model.switching_row(i, y, row);
  const double u = stream.uniform();
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    acc += row[j];
    if (u < acc) return j;
  }
  // Row sums are 1 up to rounding; fall back to the last index with mass.
  for (int j = m - 1; j >= 0; --j)
    if (row[j] > 0.0) return j;
  return m - 1;
}

Point draw_noise(SeedStream& stream, const ModelSpec& model) {
  const int dim = model.dim;
  const auto& nz = model.noise;
  Point h = Point::Zero(dim);
  switch (nz.kind) {
    case NoiseSpec::Kind::None: return h;
    case NoiseSpec::Kind::UniformBall: {
      if (dim == 1) {
        // Open interval (-eps, eps).
        h(0) = nz.epsilon * (2.0 * stream.uniform_open() - 1.0);
        return h;
      }
      // Gaussian direction, radius eps * U^{1/d}; U < 1 keeps the ball open.
      for (int k = 0; k < dim; ++k) h(k) = stream.standard_normal();
      const double radius = nz.epsilon * std::pow(stream.uniform_open(), 1.0 / dim);
      return h * (radius / h.norm());
    }
    case NoiseSpec::Kind::TruncatedGaussian: {
      for (;;) {
        for (int k = 0; k < dim; ++k) h(k) = nz.sigma * stream.standard_normal();
        if (h.norm() < nz.truncation) return h;
      }
    }
  }
  return h;
}

}  // namespace pdmp
