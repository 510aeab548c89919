#include "mla/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mla/raytrace.hpp"
#include "mla/rng.hpp"

namespace mla {

namespace {

using X3 = std::array<double, 3>;  // (R1, |R2|, t)

X3 clip(X3 x, const DesignSpec& s) {
  x[0] = std::clamp(x[0], s.r1.lo, s.r1.hi);
  x[1] = std::clamp(x[1], s.r2_abs.lo, s.r2_abs.hi);
  x[2] = std::clamp(x[2], s.t.lo, s.t.hi);
  return x;
}

BiconvexDesign design_from(const X3& x, const DesignSpec& s) {
  BiconvexDesign d;
  d.front_diameter_um = 2.0 * s.front_semi_aperture_um;
  d.front_radius_um = x[0];
  d.rear_diameter_um = s.diameter_um;
  d.rear_radius_um = -x[1];
  d.thickness_um = x[2];
  d.index = s.index;
  d.wavelength_nm = s.wavelength_nm;
  d.beam_diameter_um = s.diameter_um;
  return d;
}

struct Eval {
  double merit = std::numeric_limits<double>::infinity();
  double na = std::numeric_limits<double>::quiet_NaN();
  double rms = std::numeric_limits<double>::quiet_NaN();
};

Eval evaluate(const X3& x, const DesignSpec& s) {
  Eval e;
  try {
    BiconvexDesign d = design_from(x, s);
    LensPrescription pres = make_biconvex_prescription(d);
    if (!validate_prescription(pres).empty()) return e;
    BiconvexParams bp{s.diameter_um, x[0], -x[1], x[2], s.index};
    double na = na_biconvex(bp);
    PupilGrid grid = PupilGrid::hexapolar(s.grid_rings);
    double z = find_best_focus(pres, grid);
    SpotDiagram spot = spot_diagram(pres, grid, z);
    // A candidate must carry the whole design beam. Scoring the rms of the
    // survivors would reward designs that clip their own marginal rays.
    if (spot.n_vignetted > 0) return e;
    double rms = spot.rms_radius_um;
    double dna = na - s.target_na;
    e.merit = rms + s.na_penalty_weight * dna * dna;
    e.na = na;
    e.rms = rms;
  } catch (const std::exception&) {
    // untraceable candidate: rejected by value, never raised
  }
  return e;
}

double simplex_diameter(const std::array<X3, 4>& v, int best) {
  double dia = 0.0;
  for (int j = 0; j < 4; ++j) {
    if (j == best) continue;
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      double d = v[j][k] - v[best][k];
      d2 += d * d;
    }
    dia = std::max(dia, std::sqrt(d2));
  }
  return dia;
}

}  // namespace

double merit(const X3& x, const DesignSpec& spec) {
  return evaluate(x, spec).merit;
}

DesignResult optimize(const DesignSpec& spec, X3 start, std::uint64_t seed) {
  (void)seed;  // the search itself is deterministic; seed kept for interface
  constexpr double kAlpha = 1.0;  // reflection
  constexpr double kGamma = 2.0;  // expansion
  constexpr double kRho = 0.5;    // contraction
  constexpr double kSigma = 0.5;  // shrink

  start = clip(start, spec);
  std::array<X3, 4> v;
  std::array<double, 4> f;
  v[0] = start;
  for (int k = 0; k < 3; ++k) {
    X3 p = start;
    double delta = 0.02 * std::abs(start[k]) + 1e-3;
    p[k] += delta;
    p = clip(p, spec);
    if (p == start) {  // bumped into the upper bound; try the other way
      p[k] = start[k] - delta;
      p = clip(p, spec);
    }
    v[k + 1] = p;
  }
  for (int j = 0; j < 4; ++j) f[j] = merit(v[j], spec);

  auto order = [&]() {
    std::array<int, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return f[a] < f[b]; });
    return idx;
  };

  int iters = 0;
  bool converged = false;
  for (; iters < spec.max_iterations; ++iters) {
    auto idx = order();
    if (simplex_diameter(v, idx[0]) < spec.simplex_tolerance_um) {
      converged = true;
      break;
    }
    int worst = idx[3];
    X3 centroid{};
    for (int j = 0; j < 4; ++j) {
      if (j == worst) continue;
      for (int k = 0; k < 3; ++k) centroid[k] += v[j][k] / 3.0;
    }

    auto along = [&](const X3& from, const X3& to, double c) {
      X3 p;
      for (int k = 0; k < 3; ++k) p[k] = from[k] + c * (to[k] - from[k]);
      return clip(p, spec);
    };

    X3 xr = along(centroid, v[worst], -kAlpha);
    double fr = merit(xr, spec);
    if (fr < f[idx[0]]) {
      X3 xe = along(centroid, xr, kGamma);
      double fe = merit(xe, spec);
      if (fe < fr) {
        v[worst] = xe;
        f[worst] = fe;
      } else {
        v[worst] = xr;
        f[worst] = fr;
      }
      continue;
    }
    if (fr < f[idx[2]]) {
      v[worst] = xr;
      f[worst] = fr;
      continue;
    }
    X3 xc = fr < f[worst] ? along(centroid, xr, kRho)
                          : along(centroid, v[worst], kRho);
    double fc = merit(xc, spec);
    if (fc < std::min(fr, f[worst])) {
      v[worst] = xc;
      f[worst] = fc;
      continue;
    }
    for (int j = 0; j < 4; ++j) {  // shrink toward the best vertex
      if (j == idx[0]) continue;
      v[j] = along(v[idx[0]], v[j], kSigma);
      f[j] = merit(v[j], spec);
    }
  }

  auto idx = order();
  const X3& xb = v[idx[0]];
  Eval e = evaluate(xb, spec);
  DesignResult r;
  r.r1_um = xb[0];
  r.r2_um = -xb[1];
  r.t_um = xb[2];
  r.achieved_na = e.na;
  r.merit_um = e.merit;
  r.rms_spot_um = e.rms;
  r.iterations = iters;
  r.converged = converged;
  return r;
}

DesignResult optimize_multistart(const DesignSpec& spec, int n_starts,
                                 std::uint64_t seed) {
  if (n_starts < 1)
    throw std::domain_error("optimize_multistart: need at least one start");
  SplitMix64 rng(seed);
  DesignResult best;
  best.merit_um = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n_starts; ++j) {
    X3 start{rng.uniform(spec.r1.lo, spec.r1.hi),
             rng.uniform(spec.r2_abs.lo, spec.r2_abs.hi),
             rng.uniform(spec.t.lo, spec.t.hi)};
    DesignResult r = optimize(spec, start, seed);
    if (r.merit_um < best.merit_um) best = r;  // lowest index wins ties
  }
  return best;
}

}  // namespace mla
