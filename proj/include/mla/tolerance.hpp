#pragma once
#include <cstdint>
#include <vector>

#include "mla/paraxial.hpp"

// Monte Carlo propagation of fabrication scatter to optical performance.
// The process controls cap sag h and footprint D per lens; each sample
// perturbs those (plus a lateral decenter of the rear element), rebuilds
// the radii from the perturbed caps, and re-evaluates NA, best-focus spot,
// and focus shift.

namespace mla {

struct PerturbationSpec {
  double sigma_h_front_um = 1.60;
  double sigma_d_front_um = 0.17;
  double sigma_h_rear_um = 0.75;
  double sigma_d_rear_um = 0.37;
  double sigma_decenter_um = 1.0;
  int n_samples = 1000;
  std::uint64_t seed = 0;
  int grid_rings = 6;
  int threads = 0;  // 0 = hardware concurrency
};

struct SampleMetrics {
  double na = 0.0;
  double rms_um = 0.0;
  double geo_um = 0.0;
  double focus_shift_um = 0.0;
  double r1_um = 0.0;  // realized radii, for scatter validation
  double r2_um = 0.0;
  bool failed = false;
};

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1) convention
  double p5 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

struct ToleranceReport {
  MetricStats na;
  MetricStats rms_um;
  MetricStats geo_um;
  MetricStats focus_shift_um;
  MetricStats r1_um;
  MetricStats r2_um;
  int n_samples = 0;
  int n_failed = 0;  // invalid or untraceable samples, excluded from stats
};

// Per-sample metrics in sample order. Sample i draws from a stream seeded
// seed ^ i in a fixed order (h_front, d_front, h_rear, d_rear, dx, dy), so
// the result is identical however the samples are scheduled. Failed samples
// carry failed = true and NaN metrics.
std::vector<SampleMetrics> run_mc_samples(const BiconvexDesign& nominal,
                                          const PerturbationSpec& spec);

ToleranceReport summarize(const std::vector<SampleMetrics>& samples);

ToleranceReport run_mc(const BiconvexDesign& nominal,
                       const PerturbationSpec& spec);

// Best-focus rms with the rear element decentered by dx, minus the aligned
// best-focus rms. Zero at dx = 0, even in dx.
double decenter_sensitivity(const BiconvexDesign& nominal, double dx_um,
                            int grid_rings = 6);

}  // namespace mla
