#pragma once

#include <functional>

namespace pdmp {

// Adaptive Gauss-Kronrod (G7/K15) on [a, b]. Throws QuadratureFailure when the
// error estimate exceeds tol * max(1, |result|).
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                 unsigned max_depth = 15);

}  // namespace pdmp
