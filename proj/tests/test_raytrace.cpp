#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mla/paraxial.hpp"
#include "mla/prescription.hpp"
#include "mla/raytrace.hpp"
#include "mla/rng.hpp"

using namespace mla;

namespace {

Ray axial_ray_from(double x, double y, double z) {
  Ray r;
  r.position = {x, y, z};
  r.direction = {0.0, 0.0, 1.0};
  return r;
}

SphericalSurface sphere_at(double z, double radius, double semi_ap, double n) {
  SphericalSurface s;
  s.vertex_z_um = z;
  s.signed_radius_um = radius;
  s.semi_aperture_um = semi_ap;
  s.index_after = n;
  return s;
}

SphericalSurface plane_at(double z, double semi_ap, double n) {
  SphericalSurface s;
  s.vertex_z_um = z;
  s.semi_aperture_um = semi_ap;
  s.index_after = n;
  return s;
}

}  // namespace

TEST_CASE("intersect hits the vertex with a -z normal for either sign of R") {
  Ray axial = axial_ray_from(0, 0, -10);

  auto hit_pos = intersect(sphere_at(0.0, 79.7, 48.8, 1.43), axial);
  REQUIRE(hit_pos.has_value());
  CHECK(hit_pos->point.z == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(hit_pos->normal.z == doctest::Approx(-1.0).epsilon(1e-12));

  auto hit_neg = intersect(sphere_at(0.0, -43.5, 30.0, 1.0), axial);
  REQUIRE(hit_neg.has_value());
  CHECK(hit_neg->point.z == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(hit_neg->normal.z == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("intersect matches the sag closed form off axis") {
  // z = R - sqrt(R^2 - y^2) for a collimated ray at height y
  Ray r = axial_ray_from(0, 30, -10);
  auto hit = intersect(sphere_at(0.0, 79.7, 48.8, 1.43), r);
  REQUIRE(hit.has_value());
  CHECK(hit->point.z == doctest::Approx(5.861730789515391).epsilon(1e-12));
  CHECK(hit->point.y == doctest::Approx(30.0).epsilon(1e-15));
  // surface normal points back toward the source half-space
  CHECK(hit->normal.z < 0.0);
  CHECK(norm(hit->normal) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("intersect enforces the clear aperture") {
  SphericalSurface s = sphere_at(0.0, 79.7, 48.8, 1.43);
  CHECK(intersect(s, axial_ray_from(0, 48.79, -10)).has_value());
  CHECK(!intersect(s, axial_ray_from(0, 48.81, -10)).has_value());
}

TEST_CASE("intersect refuses hits behind the ray") {
  // starting past the vertex, the only root of a convex front cap on this
  // line lies behind the origin
  SphericalSurface s = sphere_at(0.0, 79.7, 48.8, 1.43);
  CHECK(!intersect(s, axial_ray_from(0, 0, 10)).has_value());
}

TEST_CASE("planar intersect") {
  SphericalSurface s = plane_at(5.0, 20.0, 1.5);
  Ray r;
  r.position = {0.0, -2.0, 0.0};
  r.direction = normalized({0.0, 0.3, 1.0});
  auto hit = intersect(s, r);
  REQUIRE(hit.has_value());
  CHECK(hit->point.z == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(hit->normal.z == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("refraction identities") {
  Vec3 n{0.0, 0.0, -1.0};

  // normal incidence passes through unchanged
  auto straight = refract({0, 0, 1}, n, 1.0, 1.43);
  REQUIRE(straight.has_value());
  CHECK(straight->z == doctest::Approx(1.0).epsilon(1e-12));

  // matched media leave any direction unchanged
  Vec3 d = normalized({0.2, -0.3, 0.9});
  auto same = refract(d, n, 1.37, 1.37);
  REQUIRE(same.has_value());
  CHECK(same->x == doctest::Approx(d.x).epsilon(1e-12));
  CHECK(same->y == doctest::Approx(d.y).epsilon(1e-12));
  CHECK(same->z == doctest::Approx(d.z).epsilon(1e-12));

  // scalar Snell check at a chosen angle
  double ti = 0.5;
  auto out = refract({0.0, std::sin(ti), std::cos(ti)}, n, 1.0, 1.43);
  REQUIRE(out.has_value());
  double tt = std::asin(std::sin(ti) / 1.43);
  CHECK(out->y == doctest::Approx(std::sin(tt)).epsilon(1e-12));
  CHECK(out->z == doctest::Approx(std::cos(tt)).epsilon(1e-12));

  // 45 degrees from inside n = 1.43 exceeds the critical angle
  double s45 = std::sqrt(0.5);
  CHECK(!refract({0.0, s45, s45}, n, 1.43, 1.0).has_value());
}

TEST_CASE("refraction reverses") {
  SplitMix64 rng(17);
  for (int i = 0; i < 200; ++i) {
    Vec3 d = normalized(
        {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.5, 1.0)});
    Vec3 n = normalized(
        {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), -1.0});
    double n1 = rng.uniform(1.0, 1.8), n2 = rng.uniform(1.0, 1.8);
    auto fwd = refract(d, n, n1, n2);
    if (!fwd) continue;  // TIR: nothing to reverse
    Vec3 back_dir{-fwd->x, -fwd->y, -fwd->z};
    auto back = refract(back_dir, n, n2, n1);
    REQUIRE(back.has_value());
    CHECK(back->x == doctest::Approx(-d.x).epsilon(1e-9));
    CHECK(back->y == doctest::Approx(-d.y).epsilon(1e-9));
    CHECK(back->z == doctest::Approx(-d.z).epsilon(1e-9));
  }
}

TEST_CASE("parallel plate shifts a tilted ray by the closed form") {
  LensPrescription plate;
  plate.surfaces = {plane_at(0.0, 500.0, 1.43), plane_at(10.0, 500.0, 1.0)};
  plate.entrance_beam_diameter_um = 10.0;

  double th = std::numbers::pi / 6;  // 30 degrees
  Ray r;
  r.position = {0.0, -3.0, -5.0};
  r.direction = {0.0, std::sin(th), std::cos(th)};
  TracedPath path = trace(plate, r);
  REQUIRE(path.alive);
  const Ray& out = path.states.back();

  // exit direction equals entry direction
  CHECK(out.direction.y == doctest::Approx(r.direction.y).epsilon(1e-12));
  CHECK(out.direction.z == doctest::Approx(r.direction.z).epsilon(1e-12));

  // perpendicular offset between entry and exit lines:
  // d sin(th) (1 - cos(th) / sqrt(n^2 - sin^2(th)))
  // the glass bends the ray toward the normal, so the exit line lags the
  // undeviated one; the closed form gives the unsigned offset
  double undeviated_y = r.position.y + (out.position.z - r.position.z) *
                                           r.direction.y / r.direction.z;
  double perp = std::abs(out.position.y - undeviated_y) * std::cos(th);
  CHECK(perp == doctest::Approx(1.7679318670787738).epsilon(1e-9));
}

TEST_CASE("axial ray stays axial and accumulates index-weighted path") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  TracedPath path = trace(p, make_entry_ray(p, 0.0, 0.0));
  REQUIRE(path.alive);
  for (const Ray& s : path.states) {
    CHECK(std::abs(s.position.x) < 1e-12);
    CHECK(std::abs(s.position.y) < 1e-12);
    CHECK(s.direction.z == doctest::Approx(1.0).epsilon(1e-12));
  }
  // vertex-to-vertex glass path times the index
  double geom = p.surfaces[1].vertex_z_um - p.surfaces[0].vertex_z_um;
  double opl_glass = path.states[1].opl_um - path.states[0].opl_um;
  CHECK(opl_glass == doctest::Approx(1.43 * geom).epsilon(1e-12));
}

TEST_CASE("optical path length is rotation invariant") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  SplitMix64 rng(29);
  for (int i = 0; i < 50; ++i) {
    double r = rng.uniform(1.0, 29.0);
    double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    TracedPath a = trace(p, make_entry_ray(p, r, 0.0));
    TracedPath b =
        trace(p, make_entry_ray(p, r * std::cos(phi), r * std::sin(phi)));
    REQUIRE(a.alive);
    REQUIRE(b.alive);
    CHECK(b.states.back().opl_um ==
          doctest::Approx(a.states.back().opl_um).epsilon(1e-9));
    double la = std::hypot(a.states.back().position.x,
                           a.states.back().position.y);
    double lb = std::hypot(b.states.back().position.x,
                           b.states.back().position.y);
    CHECK(lb == doctest::Approx(la).epsilon(1e-9));
  }
}

TEST_CASE("path length never decreases along the trace") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  TracedPath path = trace(p, make_entry_ray(p, 5.0, 12.0));
  REQUIRE(path.alive);
  double prev = 0.0;
  for (const Ray& s : path.states) {
    CHECK(s.opl_um >= prev);
    prev = s.opl_um;
  }
}

TEST_CASE("vignetted ray keeps its last position and dead flag") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  p.surfaces[1].semi_aperture_um = 5.0;  // choke the rear surface
  TracedPath path = trace(p, make_entry_ray(p, 0.0, 30.0));
  CHECK(!path.alive);
  REQUIRE(path.states.size() == 2);
  CHECK(path.states[0].alive);
  CHECK(!path.states[1].alive);
  CHECK(path.states[1].position.z ==
        doctest::Approx(path.states[0].position.z).epsilon(1e-15));
}

TEST_CASE("entry rays start upstream of the front cap") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  Ray r = make_entry_ray(p, 0.0, 20.0);
  CHECK(r.position.z < 0.0);
  CHECK(r.direction.z == doctest::Approx(1.0));
  CHECK(intersect(p.surfaces[0], r).has_value());
}

TEST_CASE("paraxial focus of a thin symmetric lens lands near R/(2(n-1))") {
  LensPrescription p;
  p.surfaces = {sphere_at(0.0, 100.0, 20.0, 1.43),
                sphere_at(0.1, -100.0, 20.0, 1.0)};
  p.entrance_beam_diameter_um = 10.0;
  double zf = find_paraxial_focus(p);
  CHECK(zf == doctest::Approx(116.27906976744188).epsilon(0.01));
}

TEST_CASE("paraxial focus of the reference design matches the thick-lens sum") {
  BiconvexDesign d = reference_design();
  LensPrescription p = make_biconvex_prescription(d);
  double zf = find_paraxial_focus(p);
  double expected = d.thickness_um + back_focal_distance_um(params_from_design(d));
  CHECK(zf == doctest::Approx(expected).epsilon(1e-6));  // 128.9329...
  CHECK(zf == doctest::Approx(128.93293272208086).epsilon(1e-6));
}

TEST_CASE("focus search failure modes") {
  LensPrescription plate;
  plate.surfaces = {plane_at(0.0, 100.0, 1.43), plane_at(10.0, 100.0, 1.0)};
  plate.entrance_beam_diameter_um = 10.0;
  CHECK_THROWS_AS(find_paraxial_focus(plate), NoFocusError);

  LensPrescription p = make_biconvex_prescription(reference_design());
  CHECK_THROWS_AS(find_paraxial_focus(p, 100.0), NoFocusError);
}

TEST_CASE("hexapolar grid layout") {
  PupilGrid g1 = PupilGrid::hexapolar(1);
  CHECK(g1.points.size() == 7);
  PupilGrid g = PupilGrid::hexapolar(10);
  CHECK(g.points.size() == 331);
  CHECK(g.points[0].first == 0.0);
  CHECK(g.points[0].second == 0.0);
  // first spoke of ring 1 points along +y at radius 1/10
  CHECK(g.points[1].first == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g.points[1].second == doctest::Approx(0.1).epsilon(1e-12));
  for (auto& pt : g.points)
    CHECK(std::hypot(pt.first, pt.second) <= 1.0 + 1e-12);
  // ring k holds 6k spokes at radius k/N
  size_t idx = 1;
  for (int k = 1; k <= 10; ++k)
    for (int m = 0; m < 6 * k; ++m, ++idx)
      CHECK(std::hypot(g.points[idx].first, g.points[idx].second) ==
            doctest::Approx(k / 10.0).epsilon(1e-12));
  CHECK_THROWS_AS(PupilGrid::hexapolar(0), std::domain_error);
}

TEST_CASE("near-axis bundle focuses to a point at the paraxial plane") {
  BiconvexDesign d = reference_design();
  d.beam_diameter_um = 0.6;
  LensPrescription p = make_biconvex_prescription(d);
  double zf = find_paraxial_focus(p);
  SpotDiagram spot = spot_diagram(p, PupilGrid::hexapolar(10), zf);
  CHECK(spot.n_vignetted == 0);
  CHECK(spot.geo_radius_um < 1e-3 * d.beam_diameter_um);
  CHECK(spot.rms_radius_um <= spot.geo_radius_um);

  double zb = find_best_focus(p, PupilGrid::hexapolar(10));
  CHECK(std::abs(zb - zf) < 0.05);
}

TEST_CASE("spot statistics cover every grid ray") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  PupilGrid g = PupilGrid::hexapolar(10);
  double zf = find_paraxial_focus(p);
  SpotDiagram spot = spot_diagram(p, g, zf);
  CHECK(spot.samples.size() == g.points.size());
  CHECK(spot.n_vignetted == 0);
  CHECK(spot.geo_radius_um >= spot.rms_radius_um);
  CHECK(spot.rms_radius_um > 0.0);
  // axial symmetry keeps the centroid on axis
  CHECK(std::abs(spot.centroid_x_um) < 1e-9);
  CHECK(std::abs(spot.centroid_y_um) < 1e-9);
}

TEST_CASE("vignetting grows with the entrance beam") {
  BiconvexDesign d = reference_design();
  int first = -1;
  int prev = -1;
  for (double beam : {60.0, 99.0, 110.0}) {
    d.beam_diameter_um = beam;
    LensPrescription p = make_biconvex_prescription(d);
    TracedBundle b = trace_bundle(p, PupilGrid::hexapolar(10));
    int dead = 0;
    for (auto& r : b.rays) dead += r.alive ? 0 : 1;
    CHECK(dead >= prev);  // saturates once the outer rings are all gone
    prev = dead;
    if (first < 0) first = dead;
  }
  CHECK(prev > first);
}

TEST_CASE("total internal reflection kills the outer rings of a steep cap") {
  // flat side toward the source: the curved exit face refracts glass to air
  // and rays past |R| / n of the axis cannot leave
  CapGeometry cap = equal_na_cap(60.0, 0.379, 1.43);
  LensPrescription p = make_planoconvex_flat_first(cap, 1.43, 632.8, 60.0);
  TracedBundle b = trace_bundle(p, PupilGrid::hexapolar(10));
  // escape band edge at 2|R|/(n D) = 0.7934 of the pupil: rings 8..10 die
  int dead = 0;
  for (auto& r : b.rays) dead += r.alive ? 0 : 1;
  CHECK(dead == 48 + 54 + 60);
  for (auto& r : b.rays) {
    double pr = std::hypot(r.pupil_x, r.pupil_y);
    CHECK(r.alive == (pr < 0.7934018488108198));
  }
}

TEST_CASE("best focus beats the paraxial plane under real aberration") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  PupilGrid g = PupilGrid::hexapolar(10);
  double zf = find_paraxial_focus(p);
  double zb = find_best_focus(p, g);
  CHECK(zb < zf - 5.0);  // strong undercorrection pulls focus toward the lens
  TracedBundle b = trace_bundle(p, g);
  CHECK(spot_at(b, zb).rms_radius_um < spot_at(b, zf).rms_radius_um);

  // tightening the tolerance does not move the answer materially
  double zb_fine = find_best_focus(p, g, {}, 1e-6);
  CHECK(std::abs(zb - zb_fine) < 2e-3);

  ZBracket past{zf + 5.0, zf + 20.0};  // rms grows monotonically here
  CHECK_THROWS_AS(find_best_focus(p, g, past), BracketError);
}

TEST_CASE("spot evaluation over an all-vignetted bundle throws") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  p.surfaces[0].decenter_x_um = 200.0;  // front aperture far off the beam
  TracedBundle b = trace_bundle(p, PupilGrid::hexapolar(3));
  for (const auto& r : b.rays) CHECK_FALSE(r.alive);
  CHECK_THROWS_AS(spot_at(b, 130.0), TraceError);
}

TEST_CASE("ray fan geometry") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  double zf = find_paraxial_focus(p);
  FanCurve fan = ray_fan(p, 65, zf);
  REQUIRE(fan.samples.size() == 65);
  CHECK(fan.kind == FanKind::ray_um);
  CHECK(fan.reference_z_um == doctest::Approx(zf));
  CHECK(fan.samples.front().pupil == doctest::Approx(-1.0));
  CHECK(fan.samples.back().pupil == doctest::Approx(1.0));
  const FanSample& center = fan.samples[32];
  CHECK(center.pupil == doctest::Approx(0.0));
  CHECK(center.value == doctest::Approx(0.0).epsilon(1e-12));
  // odd symmetry of a centered system
  for (int i = 0; i < 65; ++i) {
    const FanSample& a = fan.samples[i];
    const FanSample& bb = fan.samples[64 - i];
    REQUIRE(a.alive);
    CHECK(a.value == doctest::Approx(-bb.value).epsilon(1e-9));
  }
  // marginal fan value equals the transverse aberration of the marginal ray
  AxialAberration ax = spherical_aberration(p, 30.0);
  CHECK(std::abs(fan.samples.back().value) ==
        doctest::Approx(ax.ta_um).epsilon(1e-6));

  CHECK_THROWS_AS(ray_fan(p, 4), std::domain_error);   // even
  CHECK_THROWS_AS(ray_fan(p, 1), std::domain_error);   // too few
}

TEST_CASE("OPD fan geometry") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  FanCurve fan = opd_fan(p, 65);
  REQUIRE(fan.samples.size() == 65);
  CHECK(fan.kind == FanKind::opd_waves);
  const FanSample& center = fan.samples[32];
  CHECK(center.value == doctest::Approx(0.0).epsilon(1e-12));
  double peak = 0.0;
  for (int i = 0; i < 65; ++i) {
    const FanSample& a = fan.samples[i];
    const FanSample& b = fan.samples[64 - i];
    REQUIRE(a.alive);
    // even symmetry of on-axis spherical aberration
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
    peak = std::max(peak, std::abs(a.value));
  }
  CHECK(peak > 0.1);  // far from diffraction limited at full aperture
  CHECK(std::isfinite(peak));
}

TEST_CASE("spherical aberration of the reference design") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  AxialAberration marginal = spherical_aberration(p, 30.0);
  CHECK(marginal.la_um < -5.0);   // undercorrected: focuses short
  CHECK(marginal.la_um > -60.0);
  CHECK(marginal.ta_um > 0.0);

  // transverse miss is the axial miss times the exit slope, exactly
  TracedPath path = trace(p, make_entry_ray(p, 0.0, 30.0));
  REQUIRE(path.alive);
  const Ray& out = path.states.back();
  double slope = std::hypot(out.direction.x, out.direction.y) /
                 out.direction.z;
  CHECK(marginal.ta_um ==
        doctest::Approx(std::abs(marginal.la_um) * slope).epsilon(1e-9));

  // third-order scaling: LA grows with the square of the entry height
  AxialAberration lo = spherical_aberration(p, 3.0);
  AxialAberration hi = spherical_aberration(p, 6.0);
  CHECK(hi.la_um / lo.la_um == doctest::Approx(4.0).epsilon(0.1));

  // and vanishes toward the axis
  CHECK(std::abs(spherical_aberration(p, 0.03).la_um) < 0.01);

  CHECK_THROWS_AS(spherical_aberration(p, 0.0), std::domain_error);
  CHECK_THROWS_AS(spherical_aberration(p, 500.0), TraceError);
}

TEST_CASE("marginal NA from the trace matches the thick-lens formula") {
  BiconvexDesign d = reference_design();
  LensPrescription p = make_biconvex_prescription(d);
  double na_trace = marginal_na_raytrace(p);
  double na_formula = na_biconvex(params_from_design(d));
  CHECK(na_trace == doctest::Approx(na_formula).epsilon(0.01));
}

TEST_CASE("default focus bracket encloses the paraxial focus") {
  LensPrescription p = make_biconvex_prescription(reference_design());
  double zf = find_paraxial_focus(p);
  ZBracket b = default_focus_bracket(p);
  CHECK(b.lo_um < zf);
  CHECK(b.hi_um > zf);
}
