#pragma once
#include <array>
#include <string>
#include <vector>

#include "mla/errors.hpp"

// Transverse-aberration power series in normalized pupil radius s, field
// height h, and pupil azimuth theta (measured from the +y meridian), and a
// linear least-squares fit of its coefficients to traced ray data.
//
// The series, exactly as implemented (x', y' in um):
//   x' = A1 sin(t) + B1 s^3 sin(t) + B2 s^2 h sin(2t)
//        + (B3 + B4) s h^2 sin(t) + C1 s^5 sin(t) + C3 s^4 h sin(2t)
//        + (C5 + C6 cos^2 t) s^2 h^2 sin(t) + C9 s^2 h^3 sin(2t)
//        + C11 h^4 sin(t)
//   y' = A2 s cos(t) + A2 h + B1 s^3 cos(t) + B2 s^2 h (2 + cos(2t))
//        + (3 B3 + B4) s h^2 cos(t) + B5 h^3 + C1 s^5 cos(t)
//        + (C2 + C3 cos(2t)) s^4 h + (C4 + C6 cos^2 t) s^3 h^2 cos(t)
//        + (C7 + C8 cos(2t)) s^2 h^3 + C10 s h^4 cos(t) + C12 h^5
// Note the leading x' term carries no s factor and the C6 group enters the
// two components at different s powers; both asymmetries are deliberate and
// preserved. a1_scales_with_s switches the first term to A1 s sin(t) for
// the symmetric reading.

namespace mla {

struct AberrationCoefficients {
  std::array<double, 2> a{};   // A1, A2
  std::array<double, 5> b{};   // B1..B5
  std::array<double, 12> c{};  // C1..C12
  bool a1_scales_with_s = false;
};

struct RaySample {
  double s = 0.0;      // pupil radius / pupil semi-diameter, [0, 1]
  double h = 0.0;      // field height / max field, [0, 1]
  double theta = 0.0;  // radians from +y
  double x_um = 0.0;   // image-plane miss relative to the ideal point
  double y_um = 0.0;
};

struct FitResult {
  AberrationCoefficients coeffs;
  double residual_rms_um = 0.0;
  int order = 5;  // 3 fits A,B only (C frozen at 0); 5 fits everything
  // Names of coefficients the data could determine, e.g. "A1", "B3";
  // collinear pairs appear as a combination label such as "B3+B4" (the sum
  // lands in the first member). Coefficients absent here are zero.
  std::vector<std::string> identifiable;
};

void eval_expansion(const AberrationCoefficients& k, double s, double h,
                    double theta, double& x_um, double& y_um);

// Joint linear fit over both components (B1, C1, C6 shared, matching the
// series). Terms the sample design never excites (field terms of on-axis
// data, sin-theta terms of a meridional fan) come back as zero and are left
// out of identifiable. Samples confined to a single pupil azimuth, or a
// design that cannot separate the excited terms, throw RankDeficiencyError.
// Needs at least 3 samples per coefficient.
FitResult fit_expansion(const std::vector<RaySample>& samples, int order,
                        bool a1_scales_with_s = false);

}  // namespace mla
