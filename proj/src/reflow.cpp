#include "mla/reflow.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mla {

namespace {

void check_retention(double retention) {
  if (!(retention > 0.0) || retention > 1.0)
    throw std::domain_error("reflow: retention must be in (0, 1]");
}

}  // namespace

CapGeometry reflow_predict(const ResistCylinder& cyl, double retention) {
  if (!(cyl.diameter_um > 0.0))
    throw std::domain_error("reflow_predict: diameter must be > 0");
  if (cyl.thickness_um < 0.0)
    throw std::domain_error("reflow_predict: negative thickness");
  check_retention(retention);

  double d = cyl.diameter_um;
  double target = std::numbers::pi * 0.25 * d * d * cyl.thickness_um *
                  retention;
  if (target == 0.0)
    return {d, 0.0, std::numeric_limits<double>::infinity()};
  if (cap_volume(d, 0.5 * d) < target)
    throw std::domain_error(
        "reflow_predict: volume exceeds a hemisphere; model breaks down");

  // cap_volume is strictly increasing in h; 100 halvings of [0, d/2] land
  // on the root to the last representable digit.
  double lo = 0.0, hi = 0.5 * d;
  for (int i = 0; i < 100; ++i) {
    double mid = 0.5 * (lo + hi);
    (cap_volume(d, mid) < target ? lo : hi) = mid;
  }
  double h = 0.5 * (lo + hi);
  return {d, h, cap_radius(d, h)};
}

double reflow_required_thickness(double diameter_um, double target_sag_um,
                                 double retention) {
  if (!(diameter_um > 0.0))
    throw std::domain_error("reflow_required_thickness: diameter must be > 0");
  if (target_sag_um == 0.0) return 0.0;
  if (!(target_sag_um > 0.0) || target_sag_um > 0.5 * diameter_um)
    throw std::domain_error(
        "reflow_required_thickness: need 0 <= sag <= diameter/2");
  check_retention(retention);
  double d = diameter_um, h = target_sag_um;
  return h * (0.75 * d * d + h * h) / (1.5 * d * d * retention);
}

}  // namespace mla
