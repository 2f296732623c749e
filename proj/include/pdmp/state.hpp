#pragma once

#include <Eigen/Core>

#include <cstddef>

namespace pdmp {

inline constexpr int kMaxDim = 16;

// Point of the ambient space H. Fixed capacity, so no heap traffic in the
// hot simulation loop.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

// x = (y, i) in X = Y x I. The flow index is zero-based in code; files and
// the CLI use the one-based convention I = {1, ..., m}.
struct HybridState {
  Point y;
  int flow = 0;

  friend bool operator==(const HybridState& a, const HybridState& b) {
    return a.flow == b.flow && a.y.size() == b.y.size() && (a.y.array() == b.y.array()).all();
  }
};

inline HybridState make_state(double y, int flow = 0) {
  Point p(1);
  p(0) = y;
  return {p, flow};
}

// rho_c((y1,i1),(y2,i2)) = |y1 - y2| + c [i1 != i2]
inline double rho_c(const HybridState& a, const HybridState& b, double c) {
  return (a.y - b.y).norm() + (a.flow != b.flow ? c : 0.0);
}

// V(y, i) = |y - ybar|
inline double lyapunov(const HybridState& x, const Point& ybar) {
  return (x.y - ybar).norm();
}

}  // namespace pdmp
