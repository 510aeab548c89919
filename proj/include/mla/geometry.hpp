#pragma once
#include <cmath>
#include <numbers>
#include <stdexcept>

// Spherical-cap geometry. All lengths in micrometers.
//
// A cap is the piece of a sphere of radius R cut by a plane; its footprint
// diameter D and height (sag) h satisfy R = (D^2 + 4h^2) / (8h). A hemisphere
// is the h = D/2 case.

namespace mla {

struct CapGeometry {
  double diameter_um = 0.0;
  double sag_um = 0.0;
  double radius_um = 0.0;
};

// Sag of a cap of footprint diameter d on a sphere of radius r.
// Requires 0 <= d <= 2r.
inline double cap_sag(double d_um, double r_um) {
  if (d_um < 0.0 || r_um <= 0.0 || d_um > 2.0 * r_um)
    throw std::domain_error("cap_sag: need 0 <= d <= 2r, r > 0");
  double half = 0.5 * d_um;
  return r_um - std::sqrt(r_um * r_um - half * half);
}

// Sphere radius from footprint diameter and sag. Requires 0 < h <= d/2.
inline double cap_radius(double d_um, double h_um) {
  if (d_um <= 0.0 || h_um <= 0.0 || h_um > 0.5 * d_um)
    throw std::domain_error("cap_radius: need 0 < h <= d/2");
  return (d_um * d_um + 4.0 * h_um * h_um) / (8.0 * h_um);
}

// Cap volume, (pi h / 6) (3 d^2 / 4 + h^2).
inline double cap_volume(double d_um, double h_um) {
  if (d_um < 0.0 || h_um < 0.0)
    throw std::domain_error("cap_volume: negative input");
  return std::numbers::pi * h_um / 6.0 * (0.75 * d_um * d_um + h_um * h_um);
}

inline CapGeometry cap_from_diameter_radius(double d_um, double r_um) {
  return {d_um, cap_sag(d_um, r_um), r_um};
}

inline CapGeometry cap_from_diameter_sag(double d_um, double h_um) {
  return {d_um, h_um, cap_radius(d_um, h_um)};
}

}  // namespace mla
