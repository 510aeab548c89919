// Command-line surface for the micro lens toolkit: formula evaluation,
// prescription analysis, design optimization, reflow sizing, Monte Carlo
// tolerancing, and aberration-series fitting. All outputs are deterministic
// for fixed flags: JSON keys appear in fixed order and doubles print with 9
// significant digits.
//
// Exit codes: 0 success, 2 invalid input, 3 trace or numerical failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mla/aberration.hpp"
#include "mla/io.hpp"
#include "mla/optimizer.hpp"
#include "mla/paraxial.hpp"
#include "mla/prescription.hpp"
#include "mla/raytrace.hpp"
#include "mla/reflow.hpp"
#include "mla/tolerance.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kNumFail = 3;

void emit(const mla::JsonWriter& w) { std::cout << w.str() << "\n"; }

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

int report_violations(const std::vector<mla::Violation>& v) {
  for (const auto& viol : v)
    std::cerr << "invalid prescription (" << viol.rule << ", surface "
              << viol.surface_index << "): " << viol.message << "\n";
  return kBadInput;
}

void stats_json(mla::JsonWriter& w, const mla::MetricStats& s) {
  w.begin_object();
  w.key("mean").value(s.mean);
  w.key("std").value(s.stddev);
  w.key("p5").value(s.p5);
  w.key("p50").value(s.p50);
  w.key("p95").value(s.p95);
  w.end_object();
}

// ---- na / spotsize -------------------------------------------------------

struct GeometryArgs {
  bool biconvex = false;
  bool plano = false;
  std::string input;
  std::optional<double> d, r1, r2, t, h;
  double n = 1.43;
  double lambda_nm = 632.8;
};

void add_geometry_flags(CLI::App* sub, GeometryArgs& g) {
  sub->add_flag("--biconvex", g.biconvex, "two-surface thick lens formulas");
  sub->add_flag("--plano", g.plano, "single spherical cap formula");
  sub->add_option("--input", g.input, "prescription JSON file");
  sub->add_option("--d", g.d, "aperture diameter (um)");
  sub->add_option("--r1", g.r1, "front radius, signed (um)");
  sub->add_option("--r2", g.r2, "rear radius, signed (um)");
  sub->add_option("--t", g.t, "vertex-to-vertex thickness (um)");
  sub->add_option("--sag", g.h, "cap sag (um)");
  sub->add_option("--n", g.n, "refractive index")->capture_default_str();
  sub->add_option("--lambda", g.lambda_nm, "wavelength (nm)")->capture_default_str();
}

mla::BiconvexParams params_from_prescription(const mla::LensPrescription& p) {
  double inf = std::numeric_limits<double>::infinity();
  const auto& front = p.surfaces.front();
  const auto& rear = p.surfaces.back();
  double d = p.entrance_beam_diameter_um;
  for (const auto& s : p.surfaces)
    d = std::min(d, 2.0 * s.semi_aperture_um);
  return {d, front.signed_radius_um.value_or(inf),
          rear.signed_radius_um ? *rear.signed_radius_um : -inf,
          rear.vertex_z_um - front.vertex_z_um, front.index_after};
}

int run_na(const GeometryArgs& g) {
  int modes = (g.biconvex ? 1 : 0) + (g.plano ? 1 : 0) +
              (g.input.empty() ? 0 : 1);
  if (modes != 1) {
    std::cerr << "pick exactly one of --biconvex, --plano, --input\n";
    return kBadInput;
  }

  mla::JsonWriter w;
  if (g.plano) {
    if (!g.d || !g.h) {
      std::cerr << "--plano needs --d and --sag\n";
      return kBadInput;
    }
    double na = mla::na_single(*g.d, *g.h, g.n);
    w.begin_object();
    w.key("na").value(na);
    w.key("diffraction_spot_um").value(
        mla::diffraction_spot_um(na, g.lambda_nm));
    w.key("wavelength_nm").value(g.lambda_nm);
    w.end_object();
    emit(w);
    return kOk;
  }

  mla::BiconvexParams bp;
  double lambda = g.lambda_nm;
  if (g.biconvex) {
    if (!g.d || !g.r1 || !g.r2 || !g.t) {
      std::cerr << "--biconvex needs --d, --r1, --r2, --t\n";
      return kBadInput;
    }
    bp = {*g.d, *g.r1, *g.r2, *g.t, g.n};
  } else {
    mla::LensPrescription pres = mla::load_prescription(g.input);
    auto viol = mla::validate_prescription(pres);
    if (!viol.empty()) return report_violations(viol);
    bp = params_from_prescription(pres);
    lambda = pres.wavelength_nm;
  }

  w.begin_object();
  w.key("na").value(mla::na_biconvex(bp));
  w.key("diffraction_spot_um").value(mla::diffraction_spot_um(bp, lambda));
  w.key("efl_um").value(mla::effective_focal_length_um(bp));
  w.key("wavelength_nm").value(lambda);
  w.end_object();
  emit(w);
  return kOk;
}

// ---- analyze -------------------------------------------------------------

struct AnalyzeArgs {
  std::string input;
  bool spot = false, rayfan = false, opdfan = false, svg = false;
  int rings = 10;
  int fan_samples = 65;
  std::optional<double> plane_z;
  std::string out_dir = ".";
};

int run_analyze(const AnalyzeArgs& a) {
  mla::LensPrescription pres = mla::load_prescription(a.input);
  auto viol = mla::validate_prescription(pres);
  if (!viol.empty()) return report_violations(viol);

  mla::PupilGrid grid = mla::PupilGrid::hexapolar(a.rings);
  double z_par = mla::find_paraxial_focus(pres);
  double z_best = mla::find_best_focus(pres, grid);
  double plane = a.plane_z.value_or(z_best);
  mla::SpotDiagram spot = mla::spot_diagram(pres, grid, plane);

  if (a.spot) {
    std::ostringstream csv;
    mla::write_spot_csv(csv, spot);
    write_file(a.out_dir + "/spot.csv", csv.str());
    if (a.svg) write_file(a.out_dir + "/spot.svg", mla::spot_svg(spot));
  }
  if (a.rayfan) {
    mla::FanCurve fan = mla::ray_fan(pres, a.fan_samples, plane);
    std::ostringstream csv;
    mla::write_fan_csv(csv, fan);
    write_file(a.out_dir + "/rayfan.csv", csv.str());
    if (a.svg) write_file(a.out_dir + "/rayfan.svg", mla::fan_svg(fan));
  }
  std::optional<double> peak_opd;
  if (a.opdfan) {
    mla::FanCurve fan = mla::opd_fan(pres, a.fan_samples, z_best);
    std::ostringstream csv;
    mla::write_fan_csv(csv, fan);
    write_file(a.out_dir + "/opdfan.csv", csv.str());
    if (a.svg) write_file(a.out_dir + "/opdfan.svg", mla::fan_svg(fan));
    double peak = 0.0;
    for (const auto& s : fan.samples)
      if (s.alive) peak = std::max(peak, std::abs(s.value));
    peak_opd = peak;
  }

  mla::JsonWriter w;
  w.begin_object();
  w.key("paraxial_focus_z_um").value(z_par);
  w.key("best_focus_z_um").value(z_best);
  w.key("plane_z_um").value(plane);
  w.key("geo_radius_um").value(spot.geo_radius_um);
  w.key("rms_radius_um").value(spot.rms_radius_um);
  w.key("n_rays").value(static_cast<int>(spot.samples.size()));
  w.key("n_vignetted").value(spot.n_vignetted);
  w.key("peak_opd_waves");
  if (peak_opd)
    w.value(*peak_opd);
  else
    w.null_value();
  w.key("wavelength_nm").value(pres.wavelength_nm);
  w.end_object();
  emit(w);
  return kOk;
}

// ---- optimize ------------------------------------------------------------

struct OptimizeArgs {
  mla::DesignSpec spec;
  std::vector<double> start;
  int starts = 8;
  std::uint64_t seed = 0;
  std::string out;
};

int run_optimize(const OptimizeArgs& o) {
  mla::DesignResult r;
  if (!o.start.empty()) {
    if (o.start.size() != 3) {
      std::cerr << "--start needs three values: R1 |R2| t\n";
      return kBadInput;
    }
    r = mla::optimize(o.spec, {o.start[0], o.start[1], o.start[2]}, o.seed);
  } else {
    r = mla::optimize_multistart(o.spec, o.starts, o.seed);
  }

  mla::JsonWriter w;
  w.begin_object();
  w.key("r1_um").value(r.r1_um);
  w.key("r2_um").value(r.r2_um);
  w.key("t_um").value(r.t_um);
  w.key("achieved_na").value(r.achieved_na);
  w.key("merit_um").value(r.merit_um);
  w.key("rms_spot_um").value(r.rms_spot_um);
  w.key("iterations").value(r.iterations);
  w.key("converged").value(r.converged);
  w.end_object();
  emit(w);

  if (!o.out.empty()) {
    mla::BiconvexDesign d;
    d.front_diameter_um = 2.0 * o.spec.front_semi_aperture_um;
    d.front_radius_um = r.r1_um;
    d.rear_diameter_um = o.spec.diameter_um;
    d.rear_radius_um = r.r2_um;
    d.thickness_um = r.t_um;
    d.index = o.spec.index;
    d.wavelength_nm = o.spec.wavelength_nm;
    d.beam_diameter_um = o.spec.diameter_um;
    mla::save_prescription(mla::make_biconvex_prescription(d), o.out);
  }
  return kOk;
}

// ---- reflow ----------------------------------------------------------------

struct ReflowArgs {
  double diameter = 0.0;
  std::optional<double> thickness;
  std::optional<double> target_sag;
  double retention = 1.0;
};

int run_reflow(const ReflowArgs& a) {
  if (a.thickness.has_value() == a.target_sag.has_value()) {
    std::cerr << "pick exactly one of --thickness-um, --target-sag-um\n";
    return kBadInput;
  }
  mla::JsonWriter w;
  if (a.thickness) {
    mla::CapGeometry cap =
        mla::reflow_predict({a.diameter, *a.thickness}, a.retention);
    w.begin_object();
    w.key("diameter_um").value(cap.diameter_um);
    w.key("thickness_um").value(*a.thickness);
    w.key("retention").value(a.retention);
    w.key("sag_um").value(cap.sag_um);
    w.key("radius_um").value(cap.radius_um);
    w.end_object();
  } else {
    double tr = mla::reflow_required_thickness(a.diameter, *a.target_sag,
                                               a.retention);
    w.begin_object();
    w.key("diameter_um").value(a.diameter);
    w.key("target_sag_um").value(*a.target_sag);
    w.key("retention").value(a.retention);
    w.key("required_thickness_um").value(tr);
    w.end_object();
  }
  emit(w);
  return kOk;
}

// ---- tolerance -------------------------------------------------------------

struct ToleranceArgs {
  mla::PerturbationSpec spec;
  double index = 1.43;
  std::string csv;
};

int run_tolerance(const ToleranceArgs& a) {
  mla::BiconvexDesign d = mla::reference_design();
  d.index = a.index;
  d.thickness_um = mla::solve_thickness_for_na(
      d.rear_diameter_um, d.front_radius_um, d.rear_radius_um, d.index, 0.379);

  std::vector<mla::SampleMetrics> samples = mla::run_mc_samples(d, a.spec);
  mla::ToleranceReport rep = mla::summarize(samples);

  if (!a.csv.empty()) {
    std::ostringstream os;
    mla::write_mc_csv(os, samples);
    write_file(a.csv, os.str());
  }

  mla::JsonWriter w;
  w.begin_object();
  w.key("n_samples").value(rep.n_samples);
  w.key("n_failed").value(rep.n_failed);
  w.key("na");
  stats_json(w, rep.na);
  w.key("rms_um");
  stats_json(w, rep.rms_um);
  w.key("geo_um");
  stats_json(w, rep.geo_um);
  w.key("focus_shift_um");
  stats_json(w, rep.focus_shift_um);
  w.key("r1_um");
  stats_json(w, rep.r1_um);
  w.key("r2_um");
  stats_json(w, rep.r2_um);
  w.end_object();
  emit(w);
  return kOk;
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::string input;
  int order = 5;
  bool a1_scales = false;
};

std::vector<mla::RaySample> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty sample file " + path);
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "s,h,theta,x_um,y_um")
    throw std::runtime_error("expected header s,h,theta,x_um,y_um in " + path);
  std::vector<mla::RaySample> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    double vals[5];
    for (int k = 0; k < 5; ++k) {
      if (!std::getline(ls, cell, ','))
        throw std::runtime_error("short row at line " +
                                 std::to_string(lineno));
      vals[k] = std::stod(cell);
    }
    out.push_back({vals[0], vals[1], vals[2], vals[3], vals[4]});
  }
  return out;
}

int run_fit(const FitArgs& a) {
  std::vector<mla::RaySample> samples = read_samples_csv(a.input);
  mla::FitResult res = mla::fit_expansion(samples, a.order, a.a1_scales);

  mla::JsonWriter w;
  w.begin_object();
  w.key("A").begin_array();
  for (double v : res.coeffs.a) w.value(v);
  w.end_array();
  w.key("B").begin_array();
  for (double v : res.coeffs.b) w.value(v);
  w.end_array();
  w.key("C").begin_array();
  for (double v : res.coeffs.c) w.value(v);
  w.end_array();
  w.key("residual_rms_um").value(res.residual_rms_um);
  w.key("order").value(res.order);
  w.key("identifiable").begin_array();
  for (const auto& name : res.identifiable) w.value(name);
  w.end_array();
  w.end_object();
  emit(w);
  return kOk;
}

// ---- validate --------------------------------------------------------------

int run_validate(const std::string& input) {
  mla::LensPrescription pres = mla::load_prescription(input);
  auto viol = mla::validate_prescription(pres);
  mla::JsonWriter w;
  w.begin_object();
  w.key("valid").value(viol.empty());
  w.key("violations").begin_array();
  for (const auto& v : viol) {
    w.begin_object();
    w.key("surface_index").value(v.surface_index);
    w.key("rule").value(v.rule);
    w.key("message").value(v.message);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  emit(w);
  return viol.empty() ? kOk : kBadInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"micro lens array design toolkit"};
  app.require_subcommand(1);

  GeometryArgs na_args;
  CLI::App* na_cmd = app.add_subcommand("na", "numerical aperture and spot");
  add_geometry_flags(na_cmd, na_args);

  GeometryArgs spot_args;
  CLI::App* spot_cmd =
      app.add_subcommand("spotsize", "diffraction-limited spot size");
  add_geometry_flags(spot_cmd, spot_args);

  AnalyzeArgs an;
  CLI::App* an_cmd =
      app.add_subcommand("analyze", "trace a prescription, emit metrics");
  an_cmd->add_option("input", an.input, "prescription JSON")->required();
  an_cmd->add_flag("--spot", an.spot, "write spot.csv");
  an_cmd->add_flag("--rayfan", an.rayfan, "write rayfan.csv");
  an_cmd->add_flag("--opdfan", an.opdfan, "write opdfan.csv");
  an_cmd->add_flag("--svg", an.svg, "also render SVG plots");
  an_cmd->add_option("--rings", an.rings, "hexapolar pupil rings")->capture_default_str();
  an_cmd->add_option("--fan-samples", an.fan_samples, "fan sample count")->capture_default_str();
  an_cmd->add_option("--plane-z", an.plane_z,
                     "evaluation plane (um); default best focus");
  an_cmd->add_option("--out-dir", an.out_dir, "artifact directory")->capture_default_str();

  OptimizeArgs opt;
  CLI::App* opt_cmd =
      app.add_subcommand("optimize", "minimize spot radius at fixed NA");
  opt_cmd->add_option("--target-na", opt.spec.target_na, "")->capture_default_str();
  opt_cmd->add_option("--d", opt.spec.diameter_um, "limiting aperture (um)")->capture_default_str();
  opt_cmd->add_option("--n", opt.spec.index, "")->capture_default_str();
  opt_cmd->add_option("--lambda", opt.spec.wavelength_nm, "")->capture_default_str();
  opt_cmd->add_option("--front-semi-ap", opt.spec.front_semi_aperture_um, "")->capture_default_str();
  opt_cmd->add_option("--r1-min", opt.spec.r1.lo, "")->capture_default_str();
  opt_cmd->add_option("--r1-max", opt.spec.r1.hi, "")->capture_default_str();
  opt_cmd->add_option("--r2-min", opt.spec.r2_abs.lo, "")->capture_default_str();
  opt_cmd->add_option("--r2-max", opt.spec.r2_abs.hi, "")->capture_default_str();
  opt_cmd->add_option("--t-min", opt.spec.t.lo, "")->capture_default_str();
  opt_cmd->add_option("--t-max", opt.spec.t.hi, "")->capture_default_str();
  opt_cmd->add_option("--rings", opt.spec.grid_rings, "")->capture_default_str();
  opt_cmd->add_option("--max-iter", opt.spec.max_iterations, "")->capture_default_str();
  opt_cmd->add_option("--start", opt.start,
                      "single start: R1 |R2| t (three values)");
  opt_cmd->add_option("--starts", opt.starts, "multi-start count")->capture_default_str();
  opt_cmd->add_option("--seed", opt.seed, "")->capture_default_str();
  opt_cmd->add_option("--out", opt.out, "write optimized prescription here");

  ReflowArgs rf;
  CLI::App* rf_cmd =
      app.add_subcommand("reflow", "resist cylinder to cap, and back");
  rf_cmd->add_option("--diameter-um", rf.diameter, "")->required();
  rf_cmd->add_option("--thickness-um", rf.thickness, "resist thickness");
  rf_cmd->add_option("--target-sag-um", rf.target_sag, "wanted cap sag");
  rf_cmd->add_option("--retention", rf.retention, "volume retention")->capture_default_str();

  ToleranceArgs tol;
  CLI::App* tol_cmd =
      app.add_subcommand("tolerance", "Monte Carlo fabrication scatter");
  tol_cmd->add_option("--samples", tol.spec.n_samples, "")->capture_default_str();
  tol_cmd->add_option("--seed", tol.spec.seed, "")->capture_default_str();
  tol_cmd->add_option("--sigma-h-front", tol.spec.sigma_h_front_um, "")->capture_default_str();
  tol_cmd->add_option("--sigma-d-front", tol.spec.sigma_d_front_um, "")->capture_default_str();
  tol_cmd->add_option("--sigma-h-rear", tol.spec.sigma_h_rear_um, "")->capture_default_str();
  tol_cmd->add_option("--sigma-d-rear", tol.spec.sigma_d_rear_um, "")->capture_default_str();
  tol_cmd->add_option("--sigma-decenter", tol.spec.sigma_decenter_um, "")->capture_default_str();
  tol_cmd->add_option("--rings", tol.spec.grid_rings, "")->capture_default_str();
  tol_cmd->add_option("--threads", tol.spec.threads, "0 = all cores")->capture_default_str();
  tol_cmd->add_option("--n", tol.index, "refractive index")->capture_default_str();
  tol_cmd->add_option("--csv", tol.csv, "write per-sample metrics CSV");

  FitArgs fit;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "fit the aberration series to samples");
  fit_cmd->add_option("--input", fit.input, "CSV: s,h,theta,x_um,y_um")
      ->required();
  fit_cmd->add_option("--order", fit.order, "3 or 5")->capture_default_str();
  fit_cmd->add_flag("--a1-scales-s", fit.a1_scales,
                    "use the symmetric first-term reading");

  std::string validate_input;
  CLI::App* val_cmd =
      app.add_subcommand("validate", "check a prescription file");
  val_cmd->add_option("input", validate_input, "prescription JSON")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kBadInput;
  }

  try {
    if (*na_cmd) return run_na(na_args);
    if (*spot_cmd) return run_na(spot_args);
    if (*an_cmd) return run_analyze(an);
    if (*opt_cmd) return run_optimize(opt);
    if (*rf_cmd) return run_reflow(rf);
    if (*tol_cmd) return run_tolerance(tol);
    if (*fit_cmd) return run_fit(fit);
    if (*val_cmd) return run_validate(validate_input);
  } catch (const mla::TraceError& e) {
    std::cerr << "trace failure: " << e.what() << "\n";
    return kNumFail;
  } catch (const mla::NoFocusError& e) {
    std::cerr << "focus failure: " << e.what() << "\n";
    return kNumFail;
  } catch (const mla::BracketError& e) {
    std::cerr << "bracket failure: " << e.what() << "\n";
    return kNumFail;
  } catch (const mla::RankDeficiencyError& e) {
    std::cerr << "fit failure: " << e.what() << "\n";
    return kNumFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return kOk;
}
