#include "pdmp/measure.hpp"

#include "pdmp/errors.hpp"
#include "pdmp/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

namespace pdmp {

namespace {

bool state_less(const HybridState& a, const HybridState& b) {
  if (a.flow != b.flow) return a.flow < b.flow;
  return std::lexicographical_compare(a.y.data(), a.y.data() + a.y.size(), b.y.data(), b.y.data() + b.y.size());
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<HybridState> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  require(atoms_.size() == weights_.size(), "EmpiricalMeasure: atoms/weights size mismatch");
  require(!atoms_.empty(), "EmpiricalMeasure: no atoms");
  for (double w : weights_) require(w >= 0.0, "EmpiricalMeasure: negative weight");
  if (std::abs(total_mass() - 1.0) > 1e-12)
    fail(ErrorCode::PreconditionViolation, "EmpiricalMeasure: weights must sum to 1");
}

EmpiricalMeasure EmpiricalMeasure::dirac(const HybridState& x) { return EmpiricalMeasure({x}, {1.0}); }

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<HybridState> atoms) {
  const std::size_t n = atoms.size();
  require(n > 0, "EmpiricalMeasure::uniform: no atoms");
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  // Absorb the rounding of 1/n so the total is 1 to the last bit or two.
  CompensatedSum s;
  for (double v : w) s.add(v);
  w.back() += 1.0 - s.value();
  return EmpiricalMeasure(std::move(atoms), std::move(w));
}

double EmpiricalMeasure::total_mass() const {
  CompensatedSum s;
  for (double w : weights_) s.add(w);
  return s.value();
}

double EmpiricalMeasure::integrate(const Observable& g) const {
  CompensatedSum s;
  for (std::size_t k = 0; k < atoms_.size(); ++k) s.add(weights_[k] * g(atoms_[k]));
  return s.value();
}

double EmpiricalMeasure::variance(const Observable& g) const {
  const double m = integrate(g);
  CompensatedSum s;
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    const double d = g(atoms_[k]) - m;
    s.add(weights_[k] * d * d);
  }
  return s.value();
}

EmpiricalMeasure EmpiricalMeasure::merged() const {
  std::vector<std::size_t> order(atoms_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return state_less(atoms_[a], atoms_[b]); });
  std::vector<HybridState> atoms;
  std::vector<double> weights;
  for (auto k : order) {
    if (!atoms.empty() && atoms.back() == atoms_[k]) {
      weights.back() += weights_[k];
    } else {
      atoms.push_back(atoms_[k]);
      weights.push_back(weights_[k]);
    }
  }
  EmpiricalMeasure out;
  out.atoms_ = std::move(atoms);
  out.weights_ = std::move(weights);
  return out;
}

EmpiricalMeasure EmpiricalMeasure::subsample(std::size_t n, SeedStream& stream) const {
  require(n > 0, "subsample: n must be positive");
  const bool equal = std::all_of(weights_.begin(), weights_.end(),
                                 [&](double w) { return std::abs(w - weights_.front()) <= 1e-15; });
  std::vector<HybridState> picked;
  picked.reserve(n);
  if (equal && n <= atoms_.size()) {
    // Partial Fisher-Yates.
    std::vector<std::size_t> idx(atoms_.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto j = k + static_cast<std::size_t>(stream.uniform() * static_cast<double>(idx.size() - k));
      std::swap(idx[k], idx[std::min(j, idx.size() - 1)]);
      picked.push_back(atoms_[idx[k]]);
    }
  } else {
    std::vector<double> cdf(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cdf.begin());
    for (std::size_t k = 0; k < n; ++k) {
      const double u = stream.uniform() * cdf.back();
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.end()) --it;
      picked.push_back(atoms_[static_cast<std::size_t>(it - cdf.begin())]);
    }
  }
  return uniform(std::move(picked));
}

void EmpiricalMeasure::write_jsonl(std::ostream& out) const {
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    nlohmann::json rec;
    rec["y"] = std::vector<double>(atoms_[k].y.data(), atoms_[k].y.data() + atoms_[k].y.size());
    rec["i"] = atoms_[k].flow + 1;
    rec["w"] = weights_[k];
    out << rec.dump() << '\n';
  }
}

EmpiricalMeasure EmpiricalMeasure::read_jsonl(std::istream& in) {
  std::vector<HybridState> atoms;
  std::vector<double> weights;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      if (rec.contains("schema")) continue;  // self-describing header line
      const auto y = rec.at("y").get<std::vector<double>>();
      HybridState x;
      x.y = Point(static_cast<Eigen::Index>(y.size()));
      for (std::size_t c = 0; c < y.size(); ++c) x.y(static_cast<Eigen::Index>(c)) = y[c];
      x.flow = rec.at("i").get<int>() - 1;
      if (x.flow < 0) fail(ErrorCode::InvalidConfig, "measure record has index i < 1");
      atoms.push_back(x);
      weights.push_back(rec.at("w").get<double>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::InvalidConfig, std::string("bad measure record: ") + e.what());
    }
  }
  return EmpiricalMeasure(std::move(atoms), std::move(weights));
}

}  // namespace pdmp
