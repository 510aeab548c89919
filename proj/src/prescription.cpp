#include "mla/prescription.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mla/io.hpp"

namespace mla {

std::vector<Violation> validate_prescription(const LensPrescription& p) {
  std::vector<Violation> out;
  if (p.surfaces.empty())
    out.push_back({-1, "nonempty_surfaces", "prescription has no surfaces"});
  if (!(p.wavelength_nm > 0.0))
    out.push_back({-1, "wavelength_positive", "wavelength must be > 0"});
  if (!(p.entrance_beam_diameter_um > 0.0))
    out.push_back({-1, "beam_positive", "entrance beam diameter must be > 0"});
  if (!(p.ambient_index >= 1.0))
    out.push_back({-1, "index_physical", "ambient index must be >= 1"});

  for (int i = 0; i < static_cast<int>(p.surfaces.size()); ++i) {
    const auto& s = p.surfaces[i];
    if (!(s.semi_aperture_um > 0.0))
      out.push_back({i, "semi_aperture_positive", "semi-aperture must be > 0"});
    if (!(s.index_after >= 1.0))
      out.push_back({i, "index_physical", "index behind surface must be >= 1"});
    if (s.signed_radius_um) {
      double r = *s.signed_radius_um;
      if (r == 0.0 || !std::isfinite(r))
        out.push_back({i, "radius_finite_nonzero",
                       "curved surface radius must be finite and nonzero"});
      else if (s.semi_aperture_um > std::abs(r))
        out.push_back({i, "aperture_within_sphere",
                       "semi-aperture exceeds |radius|"});
    }
    if (i > 0 && !(s.vertex_z_um > p.surfaces[i - 1].vertex_z_um))
      out.push_back({i, "vertex_order", "vertices must strictly increase in z"});
  }
  return out;
}

LensPrescription parse_prescription(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("prescription JSON parse: ") +
                             e.what());
  }
  try {
    LensPrescription p;
    p.wavelength_nm = j.at("wavelength_nm").get<double>();
    p.entrance_beam_diameter_um =
        j.at("entrance_beam_diameter_um").get<double>();
    p.ambient_index = j.value("ambient_index", 1.0);
    for (const auto& js : j.at("surfaces")) {
      SphericalSurface s;
      s.vertex_z_um = js.at("vertex_z_um").get<double>();
      if (!js.at("radius_um").is_null())
        s.signed_radius_um = js.at("radius_um").get<double>();
      s.semi_aperture_um = js.at("semi_aperture_um").get<double>();
      s.index_after = js.at("index_after").get<double>();
      s.decenter_x_um = js.value("decenter_x_um", 0.0);
      s.decenter_y_um = js.value("decenter_y_um", 0.0);
      p.surfaces.push_back(s);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("prescription JSON fields: ") +
                             e.what());
  }
}

LensPrescription load_prescription(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prescription: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_prescription(buf.str());
}

std::string format_prescription(const LensPrescription& p) {
  JsonWriter w;
  w.begin_object();
  w.key("wavelength_nm").value(p.wavelength_nm);
  w.key("entrance_beam_diameter_um").value(p.entrance_beam_diameter_um);
  w.key("ambient_index").value(p.ambient_index);
  w.key("surfaces").begin_array();
  for (const auto& s : p.surfaces) {
    w.begin_object();
    w.key("vertex_z_um").value(s.vertex_z_um);
    w.key("radius_um");
    if (s.signed_radius_um)
      w.value(*s.signed_radius_um);
    else
      w.null_value();
    w.key("semi_aperture_um").value(s.semi_aperture_um);
    w.key("index_after").value(s.index_after);
    w.key("decenter_x_um").value(s.decenter_x_um);
    w.key("decenter_y_um").value(s.decenter_y_um);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

void save_prescription(const LensPrescription& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write prescription: " + path);
  out << format_prescription(p);
}

LensPrescription make_biconvex_prescription(const BiconvexDesign& d) {
  LensPrescription p;
  p.wavelength_nm = d.wavelength_nm;
  p.entrance_beam_diameter_um = d.beam_diameter_um;
  p.ambient_index = 1.0;
  p.surfaces.push_back({0.0, d.front_radius_um, 0.5 * d.front_diameter_um,
                        d.index, 0.0, 0.0});
  p.surfaces.push_back({d.thickness_um, d.rear_radius_um,
                        0.5 * d.rear_diameter_um, 1.0, 0.0, 0.0});
  return p;
}

LensPrescription make_planoconvex_flat_first(const CapGeometry& cap,
                                             double index,
                                             double wavelength_nm,
                                             double beam_diameter_um) {
  // Flat base at z = 0, dome apex downstream at z = sag; the sphere center
  // sits upstream of the apex, hence the negative signed radius.
  LensPrescription p;
  p.wavelength_nm = wavelength_nm;
  p.entrance_beam_diameter_um = beam_diameter_um;
  p.surfaces.push_back(
      {0.0, std::nullopt, 0.5 * cap.diameter_um, index, 0.0, 0.0});
  p.surfaces.push_back({cap.sag_um, -cap.radius_um, 0.5 * cap.diameter_um,
                        1.0, 0.0, 0.0});
  return p;
}

LensPrescription make_planoconvex_curved_first(const CapGeometry& cap,
                                               double index,
                                               double wavelength_nm,
                                               double beam_diameter_um) {
  LensPrescription p;
  p.wavelength_nm = wavelength_nm;
  p.entrance_beam_diameter_um = beam_diameter_um;
  p.surfaces.push_back(
      {0.0, cap.radius_um, 0.5 * cap.diameter_um, index, 0.0, 0.0});
  p.surfaces.push_back(
      {cap.sag_um, std::nullopt, 0.5 * cap.diameter_um, 1.0, 0.0, 0.0});
  return p;
}

}  // namespace mla
