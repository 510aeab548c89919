#include "mla/aberration.hpp"

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

namespace mla {

namespace {

constexpr int kTotal = 19;  // A1,A2, B1..B5, C1..C12
constexpr const char* kNames[kTotal] = {
    "A1", "A2", "B1", "B2", "B3",  "B4",  "B5", "C1", "C2", "C3",
    "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11", "C12"};

// Per-coefficient basis functions of (s, h, theta) for the x and y series.
// Zeros mark coefficients absent from that component. B1, C1 and C6 appear
// in both components and are therefore shared by the joint fit.
void basis_rows(double s, double h, double theta, bool a1_scales_with_s,
                double* bx, double* by) {
  double st = std::sin(theta), ct = std::cos(theta);
  double s2t = std::sin(2.0 * theta), c2t = std::cos(2.0 * theta);
  double ct2 = ct * ct;
  double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  double h2 = h * h, h3 = h2 * h, h4 = h3 * h, h5 = h4 * h;

  bx[0] = (a1_scales_with_s ? s : 1.0) * st;  by[0] = 0.0;
  bx[1] = 0.0;                                by[1] = s * ct + h;

  bx[2] = s3 * st;                            by[2] = s3 * ct;
  bx[3] = s2 * h * s2t;                       by[3] = s2 * h * (2.0 + c2t);
  bx[4] = s * h2 * st;                        by[4] = 3.0 * s * h2 * ct;
  bx[5] = s * h2 * st;                        by[5] = s * h2 * ct;
  bx[6] = 0.0;                                by[6] = h3;

  bx[7] = s5 * st;                            by[7] = s5 * ct;
  bx[8] = 0.0;                                by[8] = s4 * h;
  bx[9] = s4 * h * s2t;                       by[9] = s4 * h * c2t;
  bx[10] = 0.0;                               by[10] = s3 * h2 * ct;
  bx[11] = s2 * h2 * st;                      by[11] = 0.0;
  bx[12] = ct2 * s2 * h2 * st;                by[12] = ct2 * s3 * h2 * ct;
  bx[13] = 0.0;                               by[13] = s2 * h3;
  bx[14] = 0.0;                               by[14] = c2t * s2 * h3;
  bx[15] = s2 * h3 * s2t;                     by[15] = 0.0;
  bx[16] = 0.0;                               by[16] = s * h4 * ct;
  bx[17] = h4 * st;                           by[17] = 0.0;
  bx[18] = 0.0;                               by[18] = h5;
}

double coeff_at(const AberrationCoefficients& k, int idx) {
  if (idx < 2) return k.a[idx];
  if (idx < 7) return k.b[idx - 2];
  return k.c[idx - 7];
}

void set_coeff(AberrationCoefficients& k, int idx, double v) {
  if (idx < 2)
    k.a[idx] = v;
  else if (idx < 7)
    k.b[idx - 2] = v;
  else
    k.c[idx - 7] = v;
}

}  // namespace

void eval_expansion(const AberrationCoefficients& k, double s, double h,
                    double theta, double& x_um, double& y_um) {
  double bx[kTotal], by[kTotal];
  basis_rows(s, h, theta, k.a1_scales_with_s, bx, by);
  double x = 0.0, y = 0.0;
  for (int j = 0; j < kTotal; ++j) {
    double c = coeff_at(k, j);
    x += c * bx[j];
    y += c * by[j];
  }
  x_um = x;
  y_um = y;
}

FitResult fit_expansion(const std::vector<RaySample>& samples, int order,
                        bool a1_scales_with_s) {
  if (order != 3 && order != 5)
    throw std::domain_error("fit_expansion: order must be 3 or 5");
  int n_params = order == 3 ? 7 : kTotal;
  auto m = static_cast<std::ptrdiff_t>(samples.size());
  if (m < 3 * n_params)
    throw std::domain_error(
        "fit_expansion: need at least 3 samples per coefficient");

  // Stacked joint system: m x-rows then m y-rows.
  Eigen::MatrixXd A(2 * m, n_params);
  Eigen::VectorXd rhs(2 * m);
  double bx[kTotal], by[kTotal];
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const RaySample& smp = samples[i];
    basis_rows(smp.s, smp.h, smp.theta, a1_scales_with_s, bx, by);
    for (int j = 0; j < n_params; ++j) {
      A(i, j) = bx[j];
      A(m + i, j) = by[j];
    }
    rhs(i) = smp.x_um;
    rhs(m + i) = smp.y_um;
  }

  // A single pupil azimuth cannot pin down the sin-theta terms at all;
  // refuse rather than silently zeroing them. Two or more azimuths (a
  // meridional fan included) are a legitimate design whose absent terms
  // simply drop out below.
  {
    double s0 = std::sin(samples[0].theta), c0 = std::cos(samples[0].theta);
    bool one_azimuth = true;
    for (const auto& smp : samples)
      if (std::abs(std::sin(smp.theta) - s0) > 1e-12 ||
          std::abs(std::cos(smp.theta) - c0) > 1e-12) {
        one_azimuth = false;
        break;
      }
    if (one_azimuth)
      throw RankDeficiencyError(
          "fit_expansion: all samples share one azimuth; sin-theta terms "
          "are unidentifiable");
  }

  Eigen::VectorXd colnorm(n_params);
  for (int j = 0; j < n_params; ++j) colnorm(j) = A.col(j).norm();
  double ref = std::max(colnorm.maxCoeff(), 1.0);

  // Terms the data never excites (field terms of on-axis data, sin terms of
  // a meridional fan) come back as zero and are left out of identifiable.
  std::vector<int> kept;
  for (int j = 0; j < n_params; ++j)
    if (colnorm(j) > 1e-12 * ref) kept.push_back(j);

  // Exactly collinear column pairs cannot be separated; fold the second
  // member into the first and report the printed combination.
  std::vector<int> merged_into(n_params, -1);
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = a + 1; b < kept.size(); ++b) {
      int ja = kept[a], jb = kept[b];
      if (merged_into[ja] >= 0 || merged_into[jb] >= 0) continue;
      double cosang = A.col(ja).dot(A.col(jb)) / (colnorm(ja) * colnorm(jb));
      if (std::abs(cosang) > 1.0 - 1e-12) merged_into[jb] = ja;
    }
  }
  std::vector<int> solve_cols;
  for (int j : kept)
    if (merged_into[j] < 0) solve_cols.push_back(j);

  auto p = static_cast<std::ptrdiff_t>(solve_cols.size());
  Eigen::MatrixXd As(2 * m, p);
  for (std::ptrdiff_t j = 0; j < p; ++j)
    As.col(j) = A.col(solve_cols[j]) / colnorm(solve_cols[j]);

  // Normal equations first; rank-revealing QR when poorly conditioned.
  Eigen::MatrixXd G = As.transpose() * As;
  Eigen::VectorXd g = As.transpose() * rhs;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  Eigen::VectorXd sol;
  bool need_qr = es.info() != Eigen::Success;
  if (!need_qr) {
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    need_qr = !(lo > 0.0) || std::sqrt(hi / lo) > 1e10;
  }
  if (need_qr) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
    qr.setThreshold(1e-10);
    if (qr.rank() < p)
      throw RankDeficiencyError(
          "fit_expansion: sample design cannot separate the requested terms");
    sol = qr.solve(rhs);
  } else {
    sol = G.ldlt().solve(g);
  }

  FitResult out;
  out.order = order;
  out.coeffs.a1_scales_with_s = a1_scales_with_s;
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n_params);
  for (std::ptrdiff_t j = 0; j < p; ++j) {
    double v = sol(j) / colnorm(solve_cols[j]);
    set_coeff(out.coeffs, solve_cols[j], v);
    full(solve_cols[j]) = v;
  }

  for (int j : solve_cols) {
    std::string label = kNames[j];
    for (int k = 0; k < n_params; ++k)
      if (merged_into[k] == j) label += std::string("+") + kNames[k];
    out.identifiable.push_back(label);
  }

  Eigen::VectorXd resid = A * full - rhs;
  out.residual_rms_um = std::sqrt(resid.squaredNorm() / (2.0 * m));
  return out;
}

}  // namespace mla
