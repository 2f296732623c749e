#pragma once

#include "pdmp/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pdmp {

// Closed forms written out independently of the generic flow/observable code,
// so they can serve as ground truth for it. Every function acts on the first
// coordinate of a one-dimensional model.
struct GalleryOracle {
  std::function<double(int flow, double t, double y)> flow;
  // int_0^T S_i(s, y) ds
  std::function<double(int flow, double y, double T)> segment_y;
  // (G g)(y, i) for g((y, i)) = y
  std::function<double(int flow, double y)> G_y;
  // E[Y_1 | X_0 = (y, i)]
  std::function<double(int flow, double y)> one_step_mean_y;
  // CDF of the y-marginal of mu_* and nu_*, where known.
  std::optional<std::function<double(double)>> mu_star_cdf;
  std::optional<std::function<double(double)>> nu_star_cdf;
  // sigma^2(G gbar) for g = y, where known.
  std::optional<double> sigma2_G_y;
};

struct GalleryModel {
  std::string name;
  ModelSpec model;
  GalleryOracle oracle;
};

std::vector<std::string> gallery_names();
GalleryModel load_gallery(const std::string& name);

}  // namespace pdmp
