#include "pdmp/observable.hpp"

#include "pdmp/errors.hpp"

#include <cmath>

namespace pdmp {

Observable Observable::constant(double value) {
  Observable g;
  g.name_ = "one";
  g.kind_ = Kind::Constant;
  g.p0_ = value;
  g.base_sup_ = std::abs(value);
  g.base_lip_ = 0.0;
  return g;
}

Observable Observable::coordinate(int k, double sup_norm) {
  Observable g;
  g.name_ = k == 0 ? "y" : "y" + std::to_string(k);
  g.kind_ = Kind::Coordinate;
  g.coord_ = k;
  g.base_sup_ = sup_norm;
  g.base_lip_ = 1.0;
  return g;
}

Observable Observable::signed_coordinate(int k, double sup_norm, double c) {
  Observable g;
  g.name_ = "y_signed";
  g.kind_ = Kind::SignedCoordinate;
  g.coord_ = k;
  g.base_sup_ = sup_norm;
  // Across flows |y1 + y2| <= 2 sup while rho_c >= c.
  g.base_lip_ = std::max(1.0, 2.0 * sup_norm / c);
  return g;
}

Observable Observable::index(int num_flows, double c) {
  Observable g;
  g.name_ = "index";
  g.kind_ = Kind::Index;
  g.base_sup_ = num_flows;
  g.base_lip_ = (num_flows - 1) / c;
  return g;
}

Observable Observable::tanh_of(int k, double center) {
  Observable g;
  g.name_ = "tanh";
  g.kind_ = Kind::Tanh;
  g.coord_ = k;
  g.p0_ = center;
  g.base_sup_ = 1.0;
  g.base_lip_ = 1.0;
  return g;
}

Observable Observable::bump(int k, double center, double width) {
  Observable g;
  g.name_ = "bump";
  g.kind_ = Kind::Bump;
  g.coord_ = k;
  g.p0_ = center;
  g.p1_ = width;
  g.base_sup_ = 1.0;
  // max |d/du exp(-u^2/w)| = sqrt(2/w) e^{-1/2}
  g.base_lip_ = std::sqrt(2.0 / width) * std::exp(-0.5);
  return g;
}

Observable Observable::cosine(int k, double frequency) {
  Observable g;
  g.name_ = "cos";
  g.kind_ = Kind::Cosine;
  g.coord_ = k;
  g.p0_ = frequency;
  g.base_sup_ = 1.0;
  g.base_lip_ = std::abs(frequency);
  return g;
}

Observable Observable::custom(std::string name, std::function<double(const HybridState&)> fn, double sup_norm,
                              double lipschitz) {
  Observable g;
  g.name_ = std::move(name);
  g.kind_ = Kind::Custom;
  g.fn_ = std::move(fn);
  g.base_sup_ = sup_norm;
  g.base_lip_ = lipschitz;
  return g;
}

double Observable::base(const HybridState& x) const {
  switch (kind_) {
    case Kind::Constant: return p0_;
    case Kind::Coordinate: return x.y(coord_);
    case Kind::SignedCoordinate: return x.flow == 0 ? x.y(coord_) : -x.y(coord_);
    case Kind::Index: return x.flow + 1.0;
    case Kind::Tanh: return std::tanh(x.y(coord_) - p0_);
    case Kind::Bump: {
      const double u = x.y(coord_) - p0_;
      return std::exp(-u * u / p1_);
    }
    case Kind::Cosine: return std::cos(p0_ * x.y(coord_));
    case Kind::Custom: return fn_(x);
  }
  return 0.0;
}

Observable Observable::centered(double c) const {
  Observable g = *this;
  g.shift_ += c;
  return g;
}

Observable Observable::scaled(double a) const {
  Observable g = *this;
  g.scale_ *= a;
  g.shift_ *= a;
  return g;
}

std::optional<double> Observable::segment_closed_form(const FlowSpec& flow, const HybridState& x, double T) const {
  double base_integral = 0.0;
  switch (kind_) {
    case Kind::Constant: base_integral = p0_ * T; break;
    case Kind::Index: base_integral = (x.flow + 1.0) * T; break;
    case Kind::Coordinate:
    case Kind::SignedCoordinate: {
      const double y = x.y(coord_);
      if (flow.rate == 0.0) {
        base_integral = y * T;
      } else {
        const double a = flow.target(coord_);
        base_integral = a * T - (y - a) * std::expm1(-flow.rate * T) / flow.rate;
      }
      if (kind_ == Kind::SignedCoordinate && x.flow != 0) base_integral = -base_integral;
      break;
    }
    default:
      if (flow.rate == 0.0) {
        base_integral = base(x) * T;
        break;
      }
      return std::nullopt;
  }
  return scale_ * base_integral - shift_ * T;
}

std::optional<double> Observable::laplace_closed_form(const FlowSpec& flow, const HybridState& x,
                                                      double lambda) const {
  double value = 0.0;
  switch (kind_) {
    case Kind::Constant: value = p0_; break;
    case Kind::Index: value = x.flow + 1.0; break;
    case Kind::Coordinate:
    case Kind::SignedCoordinate: {
      const double y = x.y(coord_);
      const double a = flow.target(coord_);
      value = flow.rate == 0.0 ? y : a + (y - a) * lambda / (lambda + flow.rate);
      if (kind_ == Kind::SignedCoordinate && x.flow != 0) value = -value;
      break;
    }
    default:
      if (flow.rate == 0.0) {
        value = base(x);
        break;
      }
      return std::nullopt;
  }
  return scale_ * value - shift_;
}

Observable make_observable(const std::string& name, const ModelSpec& model) {
  const double ymax = std::max(model.box.lo.cwiseAbs().maxCoeff(), model.box.hi.cwiseAbs().maxCoeff());
  if (name == "one") return Observable::constant(1.0);
  if (name == "y") return Observable::coordinate(0, ymax);
  if (name.size() > 1 && name[0] == 'y' && std::isdigit(static_cast<unsigned char>(name[1]))) {
    const int k = std::stoi(name.substr(1));
    if (k < 0 || k >= model.dim) fail(ErrorCode::InvalidConfig, "observable '" + name + "' exceeds model dim");
    return Observable::coordinate(k, ymax);
  }
  if (name == "index") return Observable::index(model.num_flows(), model.constants.c);
  if (name == "tanh") return Observable::tanh_of(0, 1.0);
  if (name == "bump") return Observable::bump(0, 0.6, 0.1);
  if (name == "cos") return Observable::cosine(0, 3.0);
  if (name == "y_signed") return Observable::signed_coordinate(0, ymax, model.constants.c);
  fail(ErrorCode::InvalidConfig, "unknown observable '" + name + "'");
}

}  // namespace pdmp
