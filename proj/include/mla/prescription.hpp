#pragma once
#include <optional>
#include <string>
#include <vector>

#include "mla/geometry.hpp"
#include "mla/paraxial.hpp"

// Sequential optical system description: spherical (or planar) refracting
// surfaces ordered along +z. Radii follow the sign convention in
// paraxial.hpp. Each surface names the refractive index of the medium
// behind it; the medium before the first surface is ambient_index.

namespace mla {

struct SphericalSurface {
  double vertex_z_um = 0.0;
  std::optional<double> signed_radius_um;  // nullopt = planar
  double semi_aperture_um = 0.0;
  double index_after = 1.0;
  double decenter_x_um = 0.0;  // lateral offset of this surface's axis
  double decenter_y_um = 0.0;
};

struct LensPrescription {
  std::vector<SphericalSurface> surfaces;
  double ambient_index = 1.0;
  double wavelength_nm = 632.8;
  double entrance_beam_diameter_um = 0.0;
};

struct Violation {
  int surface_index = -1;  // -1 for whole-prescription rules
  std::string rule;
  std::string message;
};

// Structural checks: non-empty, vertices strictly increasing, positive
// apertures and beam, physical indices, aperture within the sphere.
std::vector<Violation> validate_prescription(const LensPrescription& p);

// JSON round trip. parse/load throw std::runtime_error on malformed input;
// they do not run validate_prescription.
LensPrescription parse_prescription(const std::string& json_text);
LensPrescription load_prescription(const std::string& path);
std::string format_prescription(const LensPrescription& p);
void save_prescription(const LensPrescription& p, const std::string& path);

// Two plano-convex caps on opposite faces of one substrate, curved sides
// out: the doublet the rest of the toolkit revolves around.
LensPrescription make_biconvex_prescription(const BiconvexDesign& d);

// Single cap on a flat substrate. flat_first puts the flat face toward the
// collimated source (light enters through the substrate), the orientation a
// reflowed lens is used in; curved_first flips it.
LensPrescription make_planoconvex_flat_first(const CapGeometry& cap,
                                             double index,
                                             double wavelength_nm,
                                             double beam_diameter_um);
LensPrescription make_planoconvex_curved_first(const CapGeometry& cap,
                                               double index,
                                               double wavelength_nm,
                                               double beam_diameter_um);

}  // namespace mla
