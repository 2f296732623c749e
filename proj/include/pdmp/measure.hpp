#pragma once

#include "pdmp/observable.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/state.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace pdmp {

// Finitely supported probability measure on X.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  EmpiricalMeasure(std::vector<HybridState> atoms, std::vector<double> weights);

  static EmpiricalMeasure dirac(const HybridState& x);
  static EmpiricalMeasure uniform(std::vector<HybridState> atoms);

  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const HybridState& atom(std::size_t k) const { return atoms_[k]; }
  double weight(std::size_t k) const { return weights_[k]; }
  const std::vector<HybridState>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  double total_mass() const;

  // <g, mu>
  double integrate(const Observable& g) const;
  // Weighted variance of g under mu.
  double variance(const Observable& g) const;

  // Identical atoms merged, sorted by (flow, y).
  EmpiricalMeasure merged() const;
  // n atoms with equal weights: without replacement when all weights are
  // equal and n <= size(), otherwise multinomial by weight.
  EmpiricalMeasure subsample(std::size_t n, SeedStream& stream) const;

  // JSON-lines {"y": [...], "i": 1-based, "w": weight}. Lines carrying a
  // "schema" key are headers and are skipped on read.
  void write_jsonl(std::ostream& out) const;
  static EmpiricalMeasure read_jsonl(std::istream& in);

 private:
  std::vector<HybridState> atoms_;
  std::vector<double> weights_;
};

}  // namespace pdmp
