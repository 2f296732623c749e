#pragma once

#include "pdmp/measure.hpp"

#include <cstddef>

namespace pdmp {

inline constexpr std::size_t kDefaultSupportCap = 2000;

// d_FM(mu1, mu2) = sup{ |<f, mu1 - mu2>| : |f| <= 1, |f|_Lip <= 1 w.r.t. rho_c }.
//
// Solved exactly through the dual transport problem: for probability measures
// the value is the optimal transport cost under min(rho_c, 2). That problem is
// a min-cost flow over the atoms plus one auxiliary node joined to every atom
// by unit-cost arcs (any route through it costs exactly 2). In dimension one
// only arcs between neighbouring atoms are needed, so large supports stay
// cheap. Throws SupportTooLarge when the merged support exceeds support_cap.
double fortet_mourier(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double c,
                      std::size_t support_cap = kDefaultSupportCap);

}  // namespace pdmp
