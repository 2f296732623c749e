#pragma once

#include "pdmp/model.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>

namespace pdmp {

// Bounded Lipschitz observable g : X -> R, carried together with its declared
// sup norm and Lipschitz constant with respect to rho_c. The value is
// scale * base(x) - shift, so centering and rescaling stay exact and every
// closed form below stays available.
class Observable {
 public:
  enum class Kind { Constant, Coordinate, SignedCoordinate, Index, Tanh, Bump, Cosine, Custom };

  static Observable constant(double value);
  static Observable coordinate(int k, double sup_norm);
  // (+1 on the first flow, -1 elsewhere) * y_k
  static Observable signed_coordinate(int k, double sup_norm, double c);
  // One-based flow index as a real number.
  static Observable index(int num_flows, double c);
  static Observable tanh_of(int k, double center);
  static Observable bump(int k, double center, double width);
  static Observable cosine(int k, double frequency);
  static Observable custom(std::string name, std::function<double(const HybridState&)> fn, double sup_norm,
                           double lipschitz);

  double operator()(const HybridState& x) const { return scale_ * base(x) - shift_; }

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  double sup_norm() const { return std::abs(scale_) * base_sup_ + std::abs(shift_); }
  double lipschitz() const { return std::abs(scale_) * base_lip_; }
  double shift() const { return shift_; }
  double scale() const { return scale_; }

  // g - c
  Observable centered(double c) const;
  // a * g
  Observable scaled(double a) const;

  // int_0^T g(S_i(s, y), i) ds when a closed form exists for this flow.
  std::optional<double> segment_closed_form(const FlowSpec& flow, const HybridState& x, double T) const;
  // int_0^inf lambda e^{-lambda t} g(S_i(t, y), i) dt when a closed form exists.
  std::optional<double> laplace_closed_form(const FlowSpec& flow, const HybridState& x, double lambda) const;

 private:
  double base(const HybridState& x) const;

  std::string name_;
  Kind kind_ = Kind::Constant;
  int coord_ = 0;
  double p0_ = 0.0;
  double p1_ = 0.0;
  double base_sup_ = 0.0;
  double base_lip_ = 0.0;
  double scale_ = 1.0;
  double shift_ = 0.0;
  std::function<double(const HybridState&)> fn_;
};

// Named observables: one, y, y<k>, index, tanh, bump, cos, y_signed.
Observable make_observable(const std::string& name, const ModelSpec& model);

}  // namespace pdmp
