#pragma once
#include <cmath>
#include <stdexcept>

#include "mla/geometry.hpp"

// First-order (paraxial) optics of single-cap and bi-convex micro lenses.
// Lengths in micrometers, wavelengths in nanometers, NA dimensionless.
//
// Sign convention for radii: positive when the center of curvature lies
// downstream (toward the image side) of the vertex. A lens that is convex
// on both outer faces has r1 > 0 and r2 < 0. Planar surfaces are +/-inf.

namespace mla {

// Numerical aperture of a single spherical cap of footprint diameter d and
// sag h in air, NA = 4 d h (n - 1) / (d^2 + 4 h^2). Identical to
// d (n - 1) / (2 R) when h and d come from the same sphere of radius R.
// A hemisphere (h = d/2) gives n - 1.
inline double na_single(double d_um, double h_um, double n) {
  if (d_um <= 0.0 || h_um <= 0.0 || n <= 1.0)
    throw std::domain_error("na_single: need d > 0, h > 0, n > 1");
  return 4.0 * d_um * h_um * (n - 1.0) / (d_um * d_um + 4.0 * h_um * h_um);
}

struct BiconvexParams {
  double diameter_um = 0.0;   // limiting clear aperture
  double r1_um = 0.0;         // front surface radius, signed
  double r2_um = 0.0;         // rear surface radius, signed
  double thickness_um = 0.0;  // vertex-to-vertex
  double index = 1.0;
};

// 1/r1 - 1/r2 + (n - 1) t / (n r1 r2).  Planar surfaces (infinite radius)
// contribute zero curvature and kill the thickness term.
inline double biconvex_curvature_sum(const BiconvexParams& p) {
  double c1 = std::isinf(p.r1_um) ? 0.0 : 1.0 / p.r1_um;
  double c2 = std::isinf(p.r2_um) ? 0.0 : 1.0 / p.r2_um;
  double tt = (std::isinf(p.r1_um) || std::isinf(p.r2_um))
                  ? 0.0
                  : (p.index - 1.0) * p.thickness_um /
                        (p.index * p.r1_um * p.r2_um);
  return c1 - c2 + tt;
}

// Shared scale factor d (n - 1) [1/r1 - 1/r2 + (n-1) t / (n r1 r2)].
// na_biconvex and diffraction_spot_um both derive from it so that their
// product collapses algebraically (see spot_na_product below).
inline double lens_power_scale(const BiconvexParams& p) {
  return p.diameter_um * (p.index - 1.0) * biconvex_curvature_sum(p);
}

// Thick-lens numerical aperture of a bi-convex lens in air.
inline double na_biconvex(const BiconvexParams& p) {
  if (p.diameter_um <= 0.0 || p.index <= 1.0)
    throw std::domain_error("na_biconvex: need d > 0, n > 1");
  return 0.5 * lens_power_scale(p);
}

// Diffraction-limited focused spot size. 1.64 lambda / (2 NA), so
// spot * NA = 0.82 lambda identically.
inline double diffraction_spot_um(const BiconvexParams& p,
                                  double wavelength_nm) {
  if (wavelength_nm <= 0.0)
    throw std::domain_error("diffraction_spot_um: need wavelength > 0");
  double scale = lens_power_scale(p);
  if (scale <= 0.0)
    throw std::domain_error("diffraction_spot_um: non-positive lens power");
  return 1.64 * (wavelength_nm * 1e-3) / scale;
}

// Same spot size for a bare NA (diffraction limit only).
inline double diffraction_spot_um(double na, double wavelength_nm) {
  if (na <= 0.0 || wavelength_nm <= 0.0)
    throw std::domain_error("diffraction_spot_um: need na > 0, lambda > 0");
  return 0.82 * (wavelength_nm * 1e-3) / na;
}

// Effective focal length from the thick-lens maker equation,
// 1/f = (n - 1) [1/r1 - 1/r2 + (n-1) t / (n r1 r2)].
inline double effective_focal_length_um(const BiconvexParams& p) {
  double power = (p.index - 1.0) * biconvex_curvature_sum(p);
  if (std::abs(power) < 1e-15)
    throw std::domain_error("effective_focal_length_um: afocal system");
  return 1.0 / power;
}

// Distance from the rear vertex to the rear focal point.
inline double back_focal_distance_um(const BiconvexParams& p) {
  double f = effective_focal_length_um(p);
  double front = std::isinf(p.r1_um)
                     ? 0.0
                     : (p.index - 1.0) * p.thickness_um / (p.index * p.r1_um);
  return f * (1.0 - front);
}

// Thickness that makes na_biconvex hit target_na; the NA is linear in t.
// Requires both surfaces curved.
inline double solve_thickness_for_na(double d_um, double r1_um, double r2_um,
                                     double n, double target_na) {
  if (std::isinf(r1_um) || std::isinf(r2_um))
    throw std::domain_error("solve_thickness_for_na: planar surface");
  if (d_um <= 0.0 || n <= 1.0 || target_na <= 0.0)
    throw std::domain_error("solve_thickness_for_na: bad input");
  double need = 2.0 * target_na / (d_um * (n - 1.0));
  double base = 1.0 / r1_um - 1.0 / r2_um;
  double t = (need - base) * n * r1_um * r2_um / (n - 1.0);
  if (t < 0.0)
    throw std::domain_error("solve_thickness_for_na: no t >= 0 reaches target");
  return t;
}

// Single cap matching a target NA at footprint diameter d: solves
// na_single(d, h, n) = na for the shallower of the two roots.
// Only na <= n - 1 (the hemisphere limit) is reachable.
inline CapGeometry equal_na_cap(double d_um, double na, double n) {
  if (na <= 0.0 || n <= 1.0 || d_um <= 0.0)
    throw std::domain_error("equal_na_cap: bad input");
  double k = n - 1.0;
  if (na > k)
    throw std::domain_error("equal_na_cap: na exceeds hemisphere limit n - 1");
  double rho = (k - std::sqrt(k * k - na * na)) / (2.0 * na);
  return cap_from_diameter_sag(d_um, rho * d_um);
}

// Nominal two-cap design used throughout the tests and the CLI: a 97.6 um
// front cap and a 60 um rear cap on opposite faces of one substrate, with
// the substrate thickness chosen so the assembly reaches NA 0.379 at the
// 60 um limiting aperture.
struct BiconvexDesign {
  double front_diameter_um = 97.6;
  double front_radius_um = 79.7;
  double rear_diameter_um = 60.0;
  double rear_radius_um = -43.5;
  double thickness_um = 0.0;
  double index = 1.43;
  double wavelength_nm = 632.8;
  double beam_diameter_um = 60.0;
};

inline BiconvexDesign reference_design() {
  BiconvexDesign d;
  d.thickness_um = solve_thickness_for_na(d.rear_diameter_um,
                                          d.front_radius_um, d.rear_radius_um,
                                          d.index, 0.379);
  return d;
}

inline BiconvexParams params_from_design(const BiconvexDesign& d) {
  return {d.rear_diameter_um, d.front_radius_um, d.rear_radius_um,
          d.thickness_um, d.index};
}

}  // namespace mla
