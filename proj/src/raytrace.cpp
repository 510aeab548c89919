#include "mla/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mla/accum.hpp"

namespace mla {

namespace {

constexpr double kMinAdvance = 1e-9;   // reject hits closer than this
constexpr double kApertureSlack = 1e-9;  // keep exact-edge rays

double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

// Lateral distance from the (possibly decentered) surface axis.
double axis_distance(const SphericalSurface& s, const Vec3& pt) {
  return std::hypot(pt.x - s.decenter_x_um, pt.y - s.decenter_y_um);
}

}  // namespace

std::optional<SurfaceHit> intersect(const SphericalSurface& s, const Ray& r) {
  if (!s.signed_radius_um) {
    // Planar surface: z = vertex plane.
    if (std::abs(r.direction.z) < 1e-15) return std::nullopt;
    double t = (s.vertex_z_um - r.position.z) / r.direction.z;
    if (t <= kMinAdvance) return std::nullopt;
    Vec3 hit = r.position + t * r.direction;
    if (axis_distance(s, hit) > s.semi_aperture_um + kApertureSlack)
      return std::nullopt;
    return SurfaceHit{hit, {0.0, 0.0, -1.0}};
  }

  double radius = *s.signed_radius_um;
  Vec3 center{s.decenter_x_um, s.decenter_y_um, s.vertex_z_um + radius};
  Vec3 oc = r.position - center;
  double b = 2.0 * dot(oc, r.direction);
  double c = dot(oc, oc) - radius * radius;
  double disc = b * b - 4.0 * c;
  if (disc < 0.0) return std::nullopt;
  double sq = std::sqrt(disc);
  // The physically usable hemisphere is the one containing the vertex:
  // the near intersection for a convex-toward-source surface (R > 0),
  // the far one for R < 0.
  double t = radius > 0.0 ? 0.5 * (-b - sq) : 0.5 * (-b + sq);
  if (t <= kMinAdvance) return std::nullopt;
  Vec3 hit = r.position + t * r.direction;
  if (axis_distance(s, hit) > s.semi_aperture_um + kApertureSlack)
    return std::nullopt;
  // Dividing by the signed radius orients the normal toward -z at an axial
  // vertex hit for either sign of R.
  Vec3 n = (1.0 / radius) * (hit - center);
  return SurfaceHit{hit, n};
}

std::optional<Vec3> refract(Vec3 direction, Vec3 normal, double n_in,
                            double n_out) {
  double ci = -dot(direction, normal);
  if (ci < 0.0) {  // normal pointing along the ray; flip
    normal = -1.0 * normal;
    ci = -ci;
  }
  double eta = n_in / n_out;
  double sin2t = eta * eta * (1.0 - ci * ci);
  if (sin2t > 1.0) return std::nullopt;  // total internal reflection
  double ct = std::sqrt(1.0 - sin2t);
  Vec3 out = eta * direction + (eta * ci - ct) * normal;
  return normalized(out);
}

TracedPath trace(const LensPrescription& p, Ray start) {
  TracedPath path;
  path.states.reserve(p.surfaces.size());
  Ray cur = start;
  double n_current = p.ambient_index;
  for (const auto& s : p.surfaces) {
    if (!cur.alive) {
      path.states.push_back(cur);
      continue;
    }
    auto hit = intersect(s, cur);
    if (!hit) {
      cur.alive = false;  // vignetted; position stays where it was
      path.states.push_back(cur);
      continue;
    }
    cur.opl_um += n_current * norm(hit->point - cur.position);
    cur.position = hit->point;
    auto bent = refract(cur.direction, hit->normal, n_current, s.index_after);
    if (!bent) {
      cur.alive = false;  // TIR at this surface
      path.states.push_back(cur);
      continue;
    }
    cur.direction = *bent;
    n_current = s.index_after;
    path.states.push_back(cur);
  }
  path.alive = cur.alive;
  return path;
}

Ray make_entry_ray(const LensPrescription& p, double x_um, double y_um) {
  // Start upstream of every surface point, including rear-bulging caps
  // whose edge reaches ahead of their vertex.
  double z_min = std::numeric_limits<double>::infinity();
  for (const auto& s : p.surfaces) {
    double edge = 0.0;
    if (s.signed_radius_um) {
      double r = *s.signed_radius_um;
      double a = std::min(s.semi_aperture_um, std::abs(r));
      double root = std::sqrt(r * r - a * a);
      edge = r > 0.0 ? r - root : r + root;
    }
    z_min = std::min(z_min, s.vertex_z_um + std::min(0.0, edge));
  }
  return Ray{{x_um, y_um, z_min - 10.0}, {0.0, 0.0, 1.0}, 0.0, true};
}

double find_paraxial_focus(const LensPrescription& p, double z_limit_um) {
  // The near-axis ray is measured against the traced chief ray rather than
  // the z axis, so a decentered system (whose chief ray exits deflected)
  // reports the focus of the bundle instead of failing to cross the axis.
  double h = p.entrance_beam_diameter_um / 2000.0;
  TracedPath path = trace(p, make_entry_ray(p, 0.0, h));
  TracedPath chief = trace(p, make_entry_ray(p, 0.0, 0.0));
  if (!path.alive || !chief.alive)
    throw NoFocusError("near-axis ray was vignetted");
  const Ray& last = path.states.back();
  const Ray& ref = chief.states.back();
  // Positions where each ray pierces the plane at z, as functions of z.
  double dy = last.direction.y / last.direction.z -
              ref.direction.y / ref.direction.z;
  double y0 = (last.position.y - last.position.z *
                                     last.direction.y / last.direction.z) -
              (ref.position.y - ref.position.z *
                                    ref.direction.y / ref.direction.z);
  if (!(y0 * dy < 0.0))
    throw NoFocusError("near-axis ray does not converge toward the chief");
  double z = -y0 / dy;
  if (!(z > last.position.z) || z > z_limit_um)
    throw NoFocusError("no axial crossing inside the search range");
  return z;
}

PupilGrid PupilGrid::hexapolar(int rings) {
  if (rings < 1) throw std::domain_error("hexapolar: rings must be >= 1");
  PupilGrid g;
  g.points.reserve(1 + 3 * rings * (rings + 1));
  g.points.emplace_back(0.0, 0.0);
  for (int k = 1; k <= rings; ++k) {
    double r = static_cast<double>(k) / rings;
    int spokes = 6 * k;
    for (int m = 0; m < spokes; ++m) {
      double phi = 2.0 * std::numbers::pi * m / spokes;
      // Azimuth measured from the +y meridian.
      g.points.emplace_back(r * std::sin(phi), r * std::cos(phi));
    }
  }
  return g;
}

TracedBundle trace_bundle(const LensPrescription& p, const PupilGrid& grid) {
  TracedBundle b;
  b.rays.reserve(grid.points.size());
  double pupil_r = 0.5 * p.entrance_beam_diameter_um;
  for (const auto& [px, py] : grid.points) {
    TracedPath path = trace(p, make_entry_ray(p, px * pupil_r, py * pupil_r));
    const Ray& last = path.states.back();
    b.rays.push_back({px, py, last.position, last.direction, path.alive});
  }
  return b;
}

SpotDiagram spot_at(const TracedBundle& b, double image_z_um) {
  SpotDiagram spot;
  spot.image_z_um = image_z_um;
  spot.samples.reserve(b.rays.size());
  int id = 0;
  for (const auto& f : b.rays) {
    SpotSample s;
    s.ray_id = id++;
    s.pupil_x = f.pupil_x;
    s.pupil_y = f.pupil_y;
    if (f.alive && f.direction.z > 1e-12) {
      double t = (image_z_um - f.position.z) / f.direction.z;
      s.x_um = f.position.x + t * f.direction.x;
      s.y_um = f.position.y + t * f.direction.y;
      s.alive = true;
    } else {
      s.x_um = quiet_nan();
      s.y_um = quiet_nan();
      s.alive = false;
      ++spot.n_vignetted;
    }
    spot.samples.push_back(s);
  }

  int n_alive = static_cast<int>(spot.samples.size()) - spot.n_vignetted;
  if (n_alive == 0) throw TraceError("every ray vignetted before the image");

  NeumaierSum cx, cy;
  for (const auto& s : spot.samples)
    if (s.alive) {
      cx.add(s.x_um);
      cy.add(s.y_um);
    }
  spot.centroid_x_um = cx.value() / n_alive;
  spot.centroid_y_um = cy.value() / n_alive;

  NeumaierSum r2;
  double geo = 0.0;
  for (const auto& s : spot.samples)
    if (s.alive) {
      double dx = s.x_um - spot.centroid_x_um;
      double dy = s.y_um - spot.centroid_y_um;
      double d2 = dx * dx + dy * dy;
      r2.add(d2);
      geo = std::max(geo, std::sqrt(d2));
    }
  spot.geo_radius_um = geo;
  spot.rms_radius_um = std::sqrt(r2.value() / n_alive);
  return spot;
}

SpotDiagram spot_diagram(const LensPrescription& p, const PupilGrid& grid,
                         double image_z_um) {
  return spot_at(trace_bundle(p, grid), image_z_um);
}

ZBracket default_focus_bracket(const LensPrescription& p) {
  double z_par = find_paraxial_focus(p);
  double z_last = p.surfaces.back().vertex_z_um;
  double span = z_par - z_last;
  return {z_par - 0.5 * span, z_par + 0.25 * span};
}

double find_best_focus(const LensPrescription& p, const PupilGrid& grid,
                       std::optional<ZBracket> bracket, double tol_um) {
  bool caller_bracket = bracket.has_value();
  ZBracket zb = caller_bracket ? *bracket : default_focus_bracket(p);
  if (!(zb.hi_um > zb.lo_um))
    throw BracketError("focus bracket is empty");

  TracedBundle bundle = trace_bundle(p, grid);
  auto rms = [&](double z) { return spot_at(bundle, z).rms_radius_um; };

  // Coarse scan to localize the minimum before the golden-section polish.
  // A caller-supplied bracket is taken as-is; the default one is grown away
  // from whichever edge the minimum lands on, since strong spherical
  // aberration can pull the rms minimum far inside the paraxial focal
  // distance. The lower edge never crosses the last vertex.
  constexpr int kScan = 9;
  double fz[kScan];
  int best = 0;
  double z_floor =
      p.surfaces.back().vertex_z_um + 1e-3 * (zb.hi_um - zb.lo_um);
  for (int attempt = 0;; ++attempt) {
    best = 0;
    for (int i = 0; i < kScan; ++i) {
      double z = zb.lo_um + (zb.hi_um - zb.lo_um) * i / (kScan - 1);
      fz[i] = rms(z);
      if (fz[i] < fz[best]) best = i;
    }
    if (best != 0 && best != kScan - 1) break;
    if (caller_bracket || attempt >= 8)
      throw BracketError("rms minimum sits on the bracket edge; widen it");
    if (best == 0 && zb.lo_um > z_floor)
      zb.lo_um = std::max(z_floor, zb.lo_um - (zb.hi_um - zb.lo_um));
    else if (best == kScan - 1)
      zb.hi_um += zb.hi_um - zb.lo_um;
    else
      throw BracketError("rms minimum sits on the bracket edge; widen it");
  }

  double step = (zb.hi_um - zb.lo_um) / (kScan - 1);
  double a = zb.lo_um + step * (best - 1);
  double b = zb.lo_um + step * (best + 1);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = rms(c);
  double fd = rms(d);
  while (b - a > tol_um) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = rms(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = rms(d);
    }
  }
  return 0.5 * (a + b);
}

namespace {

struct PlaneHit {
  double x = 0.0;
  double y = 0.0;
  bool ok = false;
};

PlaneHit propagate_to_plane(const Ray& last, bool alive, double z) {
  if (!alive || last.direction.z <= 1e-12) return {};
  double t = (z - last.position.z) / last.direction.z;
  return {last.position.x + t * last.direction.x,
          last.position.y + t * last.direction.y, true};
}

void check_fan_samples(int n) {
  if (n < 3 || n % 2 == 0)
    throw std::domain_error("fan sample count must be odd and >= 3");
}

}  // namespace

FanCurve ray_fan(const LensPrescription& p, int n_samples,
                 std::optional<double> plane_z_um) {
  check_fan_samples(n_samples);
  double z_ref =
      plane_z_um ? *plane_z_um : find_best_focus(p, PupilGrid::hexapolar());
  double pupil_r = 0.5 * p.entrance_beam_diameter_um;

  TracedPath chief = trace(p, make_entry_ray(p, 0.0, 0.0));
  PlaneHit chief_hit =
      propagate_to_plane(chief.states.back(), chief.alive, z_ref);
  if (!chief_hit.ok) throw TraceError("chief ray lost");

  FanCurve fan;
  fan.kind = FanKind::ray_um;
  fan.reference_z_um = z_ref;
  fan.samples.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    double pf = -1.0 + 2.0 * i / (n_samples - 1);
    TracedPath path = trace(p, make_entry_ray(p, 0.0, pf * pupil_r));
    PlaneHit hit = propagate_to_plane(path.states.back(), path.alive, z_ref);
    if (hit.ok)
      fan.samples.push_back({pf, hit.y - chief_hit.y, true});
    else
      fan.samples.push_back({pf, quiet_nan(), false});
  }
  return fan;
}

FanCurve opd_fan(const LensPrescription& p, int n_samples,
                 std::optional<double> focus_z_um) {
  check_fan_samples(n_samples);
  double z_best =
      focus_z_um ? *focus_z_um : find_best_focus(p, PupilGrid::hexapolar());
  double pupil_r = 0.5 * p.entrance_beam_diameter_um;
  double n_img = p.surfaces.back().index_after;
  double lambda_um = p.wavelength_nm * 1e-3;

  TracedPath chief = trace(p, make_entry_ray(p, 0.0, 0.0));
  PlaneHit img = propagate_to_plane(chief.states.back(), chief.alive, z_best);
  if (!img.ok) throw TraceError("chief ray lost");

  // Reference sphere: centered at the image point, through the exit pupil
  // center (taken at the last vertex on axis).
  Vec3 center{img.x, img.y, z_best};
  Vec3 exit_pupil{0.0, 0.0, p.surfaces.back().vertex_z_um};
  double r_ref = norm(center - exit_pupil);
  if (!(r_ref > 0.0)) throw TraceError("image point at the exit pupil");

  // Signed path from a ray's last state to the reference sphere, taking the
  // crossing nearest the exit pupil.
  auto sphere_path = [&](const Ray& last) -> std::optional<double> {
    Vec3 oc = last.position - center;
    double b = 2.0 * dot(oc, last.direction);
    double c = dot(oc, oc) - r_ref * r_ref;
    double disc = b * b - 4.0 * c;
    if (disc < 0.0) return std::nullopt;
    double sq = std::sqrt(disc);
    double t1 = 0.5 * (-b - sq);
    double t2 = 0.5 * (-b + sq);
    return std::abs(t1) < std::abs(t2) ? t1 : t2;
  };

  auto chief_t = sphere_path(chief.states.back());
  if (!chief_t) throw TraceError("chief ray misses the reference sphere");
  double opl_chief = chief.states.back().opl_um + n_img * *chief_t;

  FanCurve fan;
  fan.kind = FanKind::opd_waves;
  fan.reference_z_um = z_best;
  fan.samples.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    double pf = -1.0 + 2.0 * i / (n_samples - 1);
    TracedPath path = trace(p, make_entry_ray(p, 0.0, pf * pupil_r));
    if (!path.alive) {
      fan.samples.push_back({pf, quiet_nan(), false});
      continue;
    }
    auto t = sphere_path(path.states.back());
    if (!t) {
      fan.samples.push_back({pf, quiet_nan(), false});
      continue;
    }
    double opl = path.states.back().opl_um + n_img * *t;
    fan.samples.push_back({pf, (opl - opl_chief) / lambda_um, true});
  }
  return fan;
}

AxialAberration spherical_aberration(const LensPrescription& p, double s_um) {
  if (!(s_um > 0.0))
    throw std::domain_error("spherical_aberration: ray height must be > 0");
  double z_par = find_paraxial_focus(p);
  TracedPath path = trace(p, make_entry_ray(p, 0.0, s_um));
  if (!path.alive) throw TraceError("aberration ray vignetted");
  const Ray& last = path.states.back();
  if (!(last.direction.y < 0.0))
    throw NoFocusError("aberration ray does not cross the axis");
  double steps = -last.position.y / last.direction.y;
  double z_cross = last.position.z + steps * last.direction.z;
  double ta = last.position.y +
              (z_par - last.position.z) / last.direction.z * last.direction.y;
  return {z_cross - z_par, std::abs(ta)};
}

double marginal_na_raytrace(const LensPrescription& p) {
  double h = p.entrance_beam_diameter_um / 200.0;
  TracedPath path = trace(p, make_entry_ray(p, 0.0, h));
  if (!path.alive) throw TraceError("scaled marginal ray vignetted");
  const Ray& last = path.states.back();
  double sin_u = std::hypot(last.direction.x, last.direction.y);
  return 100.0 * p.surfaces.back().index_after * sin_u;
}

}  // namespace mla
