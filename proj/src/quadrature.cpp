#include "pdmp/quadrature.hpp"

#include "pdmp/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

namespace pdmp {

double integrate(const std::function<double(double)>& f, double a, double b, double tol, unsigned max_depth) {
  if (a == b) return 0.0;
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, tol, &error);
  if (!std::isfinite(value) || error > tol * std::max(1.0, std::abs(value))) {
    std::ostringstream msg;
    msg << "quadrature on [" << a << ", " << b << "] did not reach tolerance " << tol << " (error estimate "
        << error << ")";
    fail(ErrorCode::QuadratureFailure, msg.str());
  }
  return value;
}

}  // namespace pdmp
