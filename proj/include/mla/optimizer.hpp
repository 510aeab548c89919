#pragma once
#include <array>
#include <cstdint>

#include "mla/prescription.hpp"

// Spot-radius minimization over (R1, |R2|, t) at a fixed target NA and fixed
// apertures, via Nelder-Mead with an NA penalty. Derivative-free on purpose:
// the merit runs a ray-sampled focus search inside.

namespace mla {

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct DesignSpec {
  double target_na = 0.379;
  double diameter_um = 60.0;  // limiting aperture, held fixed
  double index = 1.43;
  double wavelength_nm = 632.8;
  double front_semi_aperture_um = 48.8;
  Bounds r1{48.8, 300.0};
  Bounds r2_abs{30.0, 300.0};
  Bounds t{0.0, 300.0};
  // Penalty weight in um per NA^2: 1e5 prices a 0.01 NA miss at 10 um of
  // spot radius, far above any achievable rms.
  double na_penalty_weight = 1e5;
  double na_tolerance = 0.005;
  int max_iterations = 500;
  double simplex_tolerance_um = 1e-3;
  int grid_rings = 6;
};

struct DesignResult {
  double r1_um = 0.0;
  double r2_um = 0.0;  // signed (negative)
  double t_um = 0.0;
  double achieved_na = 0.0;
  double merit_um = 0.0;
  double rms_spot_um = 0.0;
  int iterations = 0;
  bool converged = false;
};

// x = (R1, |R2|, t). Best-focus rms spot radius plus the NA penalty;
// +infinity for candidates that fail validation or cannot be traced.
double merit(const std::array<double, 3>& x, const DesignSpec& spec);

DesignResult optimize(const DesignSpec& spec, std::array<double, 3> start,
                      std::uint64_t seed = 0);

// k independent runs from seeded uniform draws inside the bounds; minimum
// merit wins, lowest start index breaking ties.
DesignResult optimize_multistart(const DesignSpec& spec, int n_starts = 8,
                                 std::uint64_t seed = 0);

}  // namespace mla
