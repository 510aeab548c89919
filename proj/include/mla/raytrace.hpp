#pragma once
#include <optional>
#include <utility>
#include <vector>

#include "mla/errors.hpp"
#include "mla/prescription.hpp"
#include "mla/vec3.hpp"

// Exact sequential ray tracing through spherical surfaces, plus the derived
// image-quality metrics: spot diagrams, ray fans, OPD fans, and axial
// (spherical) aberration. Lengths in micrometers.

namespace mla {

struct Ray {
  Vec3 position;
  Vec3 direction;    // unit
  double opl_um = 0.0;  // index-weighted path length
  bool alive = true;
};

struct SurfaceHit {
  Vec3 point;
  Vec3 normal;  // unit, (0,0,-1) at an axial vertex hit for either sign of R
};

// Nearest forward intersection within the clear aperture; nullopt = the ray
// misses and is vignetted (a value, not an error).
std::optional<SurfaceHit> intersect(const SphericalSurface& s, const Ray& r);

// Vector Snell refraction. nullopt = total internal reflection.
std::optional<Vec3> refract(Vec3 direction, Vec3 normal, double n_in,
                            double n_out);

struct TracedPath {
  std::vector<Ray> states;  // one state per surface, post-refraction
  bool alive = false;
};

TracedPath trace(const LensPrescription& p, Ray start);

// Collimated entry ray parallel to +z at lateral offset (x, y), started
// upstream of every surface point.
Ray make_entry_ray(const LensPrescription& p, double x_um, double y_um);

// Axial crossing of a ray at 1/1000 of the beam radius is the paraxial
// focus reference.
double find_paraxial_focus(const LensPrescription& p, double z_limit_um = 1e7);

// Pupil sample positions on the unit disk; scaled by the entrance beam
// radius when traced. hexapolar: ring k of N carries 6k spokes, plus the
// center ray: 1 + 3N(N+1) points.
struct PupilGrid {
  std::vector<std::pair<double, double>> points;
  static PupilGrid hexapolar(int rings = 10);
};

struct SpotSample {
  int ray_id = 0;
  double pupil_x = 0.0;  // unit-disk coordinates
  double pupil_y = 0.0;
  double x_um = 0.0;  // image-plane intersection; NaN when dead
  double y_um = 0.0;
  bool alive = false;
};

struct SpotDiagram {
  double image_z_um = 0.0;
  std::vector<SpotSample> samples;  // every grid ray, vignetted ones flagged
  double centroid_x_um = 0.0;  // statistics cover surviving rays only
  double centroid_y_um = 0.0;
  double geo_radius_um = 0.0;  // max distance from centroid
  double rms_radius_um = 0.0;
  int n_vignetted = 0;
};

// Grid rays traced once; image-plane evaluation is then a cheap propagation,
// so focus searches do not re-trace.
struct TracedBundle {
  struct Final {
    double pupil_x = 0.0;
    double pupil_y = 0.0;
    Vec3 position;
    Vec3 direction;
    bool alive = false;
  };
  std::vector<Final> rays;
};

TracedBundle trace_bundle(const LensPrescription& p, const PupilGrid& grid);
SpotDiagram spot_at(const TracedBundle& b, double image_z_um);

SpotDiagram spot_diagram(const LensPrescription& p, const PupilGrid& grid,
                         double image_z_um);

struct ZBracket {
  double lo_um = 0.0;
  double hi_um = 0.0;
};

// Bracket around the paraxial focus, sized by the focal distance from the
// last vertex: [z_par - span/2, z_par + span/4].
ZBracket default_focus_bracket(const LensPrescription& p);

// Plane of minimum rms spot radius via coarse scan + golden-section search.
// The default bracket grows itself away from an edge minimum (never below
// the last vertex); a caller-supplied bracket is taken as-is and throws
// BracketError when the minimum sits on its edge.
double find_best_focus(const LensPrescription& p, const PupilGrid& grid,
                       std::optional<ZBracket> bracket = {},
                       double tol_um = 1e-3);

enum class FanKind { ray_um, opd_waves };

struct FanSample {
  double pupil = 0.0;  // [-1, 1] along the meridional line
  double value = 0.0;  // NaN when the ray died
  bool alive = false;
};

struct FanCurve {
  std::vector<FanSample> samples;
  FanKind kind = FanKind::ray_um;
  double reference_z_um = 0.0;
};

// Transverse aberration (y minus chief-ray y, um) across the meridional
// pupil line at the reference plane; plane defaults to best focus.
// n_samples must be odd and >= 3 so the chief ray is included.
FanCurve ray_fan(const LensPrescription& p, int n_samples = 65,
                 std::optional<double> plane_z_um = {});

// Optical path difference in waves against a reference sphere centered at
// the best-focus image point and passing through the exit pupil center
// (the last vertex).
FanCurve opd_fan(const LensPrescription& p, int n_samples = 65,
                 std::optional<double> focus_z_um = {});

struct AxialAberration {
  double la_um = 0.0;  // axial miss; negative = focuses short of paraxial
  double ta_um = 0.0;  // |y| at the paraxial plane
};

// Longitudinal and transverse spherical aberration of the ray entering at
// height s_um.
AxialAberration spherical_aberration(const LensPrescription& p, double s_um);

// Marginal-ray NA measured by tracing at 1/100 of the beam and scaling the
// exit slope back up; agrees with the thick-lens formula in the paraxial
// limit.
double marginal_na_raytrace(const LensPrescription& p);

}  // namespace mla
