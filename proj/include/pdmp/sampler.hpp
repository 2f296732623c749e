#pragma once

#include "pdmp/model.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

// Exp(lambda) inter-jump time.
double draw_interjump(SeedStream& stream, double lambda);

// theta ~ p(y, .). Inverse CDF for the fixed families, rejection against a
// uniform envelope for the state-dependent one.
double draw_theta(SeedStream& stream, const ModelSpec& model, const Point& y);

// j ~ pi_i.(y), zero-based.
int draw_switch(SeedStream& stream, const ModelSpec& model, int i, const Point& y);

// h ~ nu^eps with |h| < eps.
Point draw_noise(SeedStream& stream, const ModelSpec& model);

}  // namespace pdmp
