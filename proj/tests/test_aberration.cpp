#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mla/aberration.hpp"
#include "mla/paraxial.hpp"
#include "mla/prescription.hpp"
#include "mla/raytrace.hpp"
#include "mla/rng.hpp"

using namespace mla;

namespace {

bool lists(const FitResult& f, const std::string& name) {
  return std::find(f.identifiable.begin(), f.identifiable.end(), name) !=
         f.identifiable.end();
}

std::vector<RaySample> synthesize(const AberrationCoefficients& k, int m,
                                  uint64_t seed, double h_max = 1.0) {
  SplitMix64 rng(seed);
  std::vector<RaySample> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    RaySample smp;
    smp.s = rng.uniform(0.0, 1.0);
    smp.h = rng.uniform(0.0, h_max);
    smp.theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    eval_expansion(k, smp.s, smp.h, smp.theta, smp.x_um, smp.y_um);
    out.push_back(smp);
  }
  return out;
}

void check_close(const AberrationCoefficients& got,
                 const AberrationCoefficients& want, double tol) {
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(got.a[i] - want.a[i]) <=
          tol * std::max(1.0, std::abs(want.a[i])));
  for (int i = 0; i < 5; ++i)
    CHECK(std::abs(got.b[i] - want.b[i]) <=
          tol * std::max(1.0, std::abs(want.b[i])));
  for (int i = 0; i < 12; ++i)
    CHECK(std::abs(got.c[i] - want.c[i]) <=
          tol * std::max(1.0, std::abs(want.c[i])));
}

AberrationCoefficients random_coeffs(uint64_t seed, bool with_c) {
  SplitMix64 rng(seed);
  AberrationCoefficients k;
  for (auto& v : k.a) v = rng.uniform(-5.0, 5.0);
  for (auto& v : k.b) v = rng.uniform(-5.0, 5.0);
  if (with_c)
    for (auto& v : k.c) v = rng.uniform(-5.0, 5.0);
  return k;
}

}  // namespace

TEST_CASE("expansion evaluation basics") {
  AberrationCoefficients zero;
  double x, y;
  eval_expansion(zero, 0.7, 0.3, 1.1, x, y);
  CHECK(x == 0.0);
  CHECK(y == 0.0);

  AberrationCoefficients b1;
  b1.b[0] = 2.0;
  eval_expansion(b1, 0.5, 0.0, 0.7, x, y);
  CHECK(x == doctest::Approx(2.0 * 0.125 * std::sin(0.7)).epsilon(1e-12));
  CHECK(y == doctest::Approx(2.0 * 0.125 * std::cos(0.7)).epsilon(1e-12));

  // A2 carries both the pupil tilt and the field term
  AberrationCoefficients a2;
  a2.a[1] = 3.0;
  eval_expansion(a2, 0.4, 0.6, 0.0, x, y);
  CHECK(x == 0.0);
  CHECK(y == doctest::Approx(3.0 * (0.4 + 0.6)).epsilon(1e-12));
}

TEST_CASE("leading x term ignores s unless asked to scale") {
  AberrationCoefficients k;
  k.a[0] = 2.5;
  double x, y;
  eval_expansion(k, 0.5, 0.0, std::numbers::pi / 2, x, y);
  CHECK(x == doctest::Approx(2.5).epsilon(1e-12));

  k.a1_scales_with_s = true;
  eval_expansion(k, 0.5, 0.0, std::numbers::pi / 2, x, y);
  CHECK(x == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("order-5 roundtrip recovers random coefficients") {
  for (uint64_t seed : {1u, 2u, 3u}) {
    AberrationCoefficients truth = random_coeffs(seed, true);
    std::vector<RaySample> data = synthesize(truth, 300, seed * 977 + 5);
    FitResult fit = fit_expansion(data, 5);
    check_close(fit.coeffs, truth, 1e-8);
    CHECK(fit.residual_rms_um < 1e-8);
    CHECK(fit.order == 5);
    CHECK(fit.identifiable.size() == 19);
  }
}

TEST_CASE("order-3 roundtrip recovers A and B and freezes C") {
  AberrationCoefficients truth = random_coeffs(17, false);
  std::vector<RaySample> data = synthesize(truth, 150, 991);
  FitResult fit = fit_expansion(data, 3);
  check_close(fit.coeffs, truth, 1e-8);
  for (double c : fit.coeffs.c) CHECK(c == 0.0);
  CHECK(fit.order == 3);
  CHECK(fit.identifiable.size() == 7);
}

TEST_CASE("roundtrip with the scaled leading term") {
  AberrationCoefficients truth = random_coeffs(23, true);
  truth.a1_scales_with_s = true;
  std::vector<RaySample> data = synthesize(truth, 300, 555);
  FitResult fit = fit_expansion(data, 5, true);
  CHECK(fit.coeffs.a1_scales_with_s);
  check_close(fit.coeffs, truth, 1e-8);
}

TEST_CASE("on-axis data zeroes the field terms and reports them out") {
  AberrationCoefficients truth;
  truth.a[0] = 0.8;
  truth.a[1] = -1.2;
  truth.b[0] = 2.0;
  truth.c[0] = 0.6;
  std::vector<RaySample> data = synthesize(truth, 200, 31, 0.0);  // h = 0
  FitResult fit = fit_expansion(data, 5);
  CHECK(fit.coeffs.a[0] == doctest::Approx(0.8).epsilon(1e-8));
  CHECK(fit.coeffs.a[1] == doctest::Approx(-1.2).epsilon(1e-8));
  CHECK(fit.coeffs.b[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(fit.coeffs.c[0] == doctest::Approx(0.6).epsilon(1e-8));
  for (int i = 1; i < 5; ++i) CHECK(fit.coeffs.b[i] == 0.0);
  for (int i = 1; i < 12; ++i) CHECK(fit.coeffs.c[i] == 0.0);
  CHECK(lists(fit, "A1"));
  CHECK(lists(fit, "A2"));
  CHECK(lists(fit, "B1"));
  CHECK(lists(fit, "C1"));
  CHECK(fit.identifiable.size() == 4);
  CHECK(fit.residual_rms_um < 1e-10);
}

TEST_CASE("single-azimuth data cannot pin the sin terms") {
  AberrationCoefficients truth = random_coeffs(7, false);
  SplitMix64 rng(77);
  std::vector<RaySample> data;
  for (int i = 0; i < 60; ++i) {
    RaySample smp;
    smp.s = rng.uniform(0.0, 1.0);
    smp.h = rng.uniform(0.0, 1.0);
    smp.theta = 0.0;
    eval_expansion(truth, smp.s, smp.h, smp.theta, smp.x_um, smp.y_um);
    data.push_back(smp);
  }
  CHECK_THROWS_AS(fit_expansion(data, 3), RankDeficiencyError);
}

TEST_CASE("a meridional fan is a legal design with sin terms excluded") {
  AberrationCoefficients truth;
  truth.a[1] = 1.4;   // tilt/defocus slope
  truth.b[0] = -3.0;  // cubic pupil term
  std::vector<RaySample> data;
  for (int i = 0; i <= 40; ++i) {
    double p = -1.0 + 2.0 * i / 40.0;
    RaySample smp;
    smp.s = std::abs(p);
    smp.h = 0.0;
    smp.theta = p >= 0.0 ? 0.0 : std::numbers::pi;
    eval_expansion(truth, smp.s, smp.h, smp.theta, smp.x_um, smp.y_um);
    data.push_back(smp);
  }
  FitResult fit = fit_expansion(data, 3);
  CHECK(fit.coeffs.a[1] == doctest::Approx(1.4).epsilon(1e-8));
  CHECK(fit.coeffs.b[0] == doctest::Approx(-3.0).epsilon(1e-8));
  CHECK(fit.coeffs.a[0] == 0.0);  // no sin content anywhere in the data
  CHECK(!lists(fit, "A1"));
  CHECK(lists(fit, "A2"));
  CHECK(lists(fit, "B1"));
  CHECK(fit.residual_rms_um < 1e-10);
}

TEST_CASE("collinear columns merge into a combination label") {
  // theta fixed at +y/-y meridians with varying s, h > 0: the two s h^2
  // terms become proportional and only their combination is resolvable
  AberrationCoefficients truth;
  truth.a[1] = 0.5;
  truth.b[0] = 1.0;
  truth.b[2] = 2.0;  // B3
  truth.b[3] = 0.7;  // B4
  truth.b[4] = -.3;  // B5
  SplitMix64 rng(13);
  std::vector<RaySample> data;
  for (int i = 0; i < 120; ++i) {
    RaySample smp;
    smp.s = rng.uniform(0.0, 1.0);
    smp.h = rng.uniform(0.0, 1.0);
    smp.theta = (i % 2) ? 0.0 : std::numbers::pi;
    eval_expansion(truth, smp.s, smp.h, smp.theta, smp.x_um, smp.y_um);
    data.push_back(smp);
  }
  FitResult fit = fit_expansion(data, 3);
  CHECK(lists(fit, "B3+B4"));
  CHECK(!lists(fit, "B4"));
  CHECK(fit.coeffs.b[3] == 0.0);
  CHECK(fit.residual_rms_um < 1e-9);
  // the recovered combination reproduces the data it was fit to
  for (const RaySample& smp : data) {
    double x, y;
    eval_expansion(fit.coeffs, smp.s, smp.h, smp.theta, x, y);
    CHECK(x == doctest::Approx(smp.x_um).epsilon(1e-7));
    CHECK(y == doctest::Approx(smp.y_um).epsilon(1e-7));
  }
}

TEST_CASE("sample count precondition") {
  AberrationCoefficients truth = random_coeffs(3, false);
  std::vector<RaySample> data = synthesize(truth, 20, 44);  // 3 * 7 = 21 needed
  CHECK_THROWS_AS(fit_expansion(data, 3), std::domain_error);
  CHECK_THROWS_AS(fit_expansion(synthesize(truth, 30, 44), 5),
                  std::domain_error);  // 57 needed
  CHECK_THROWS_AS(fit_expansion(synthesize(truth, 60, 44), 4),
                  std::domain_error);  // order is 3 or 5
}

TEST_CASE("traced on-axis fan is dominated by the cubic term") {
  // moderate-NA single cap, curved side first: mild spherical aberration
  CapGeometry cap = equal_na_cap(60.0, 0.2, 1.43);
  LensPrescription lens =
      make_planoconvex_curved_first(cap, 1.43, 632.8, 60.0);
  FanCurve fan = ray_fan(lens, 65);

  std::vector<RaySample> data;
  double peak = 0.0;
  for (const FanSample& fs : fan.samples) {
    if (!fs.alive) continue;
    RaySample smp;
    smp.s = std::abs(fs.pupil);
    smp.h = 0.0;
    smp.theta = fs.pupil >= 0.0 ? 0.0 : std::numbers::pi;
    smp.x_um = 0.0;
    smp.y_um = fs.value;
    data.push_back(smp);
    peak = std::max(peak, std::abs(fs.value));
  }
  // the pupil +-1 rays graze the rim where the curved face meets the flat
  // back plane; the zero-length hop to the next surface vignettes them
  REQUIRE(data.size() >= 63);

  FitResult fit = fit_expansion(data, 3);
  CHECK(fit.coeffs.b[0] != 0.0);
  CHECK(fit.residual_rms_um < 0.05 * peak);

  // adding the fifth-order pupil term only helps
  FitResult fit5 = fit_expansion(data, 5);
  CHECK(fit5.residual_rms_um <= fit.residual_rms_um + 1e-12);
}
