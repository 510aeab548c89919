#pragma once
#include "mla/geometry.hpp"

// Thermal reflow surrogate: a patterned resist cylinder melts into a
// spherical cap of the same volume with the contact line pinned at the
// lithographed footprint.

namespace mla {

struct ResistCylinder {
  double diameter_um = 0.0;
  double thickness_um = 0.0;
};

// Cap with the cylinder's footprint and (retention x cylinder) volume.
// retention < 1 models solvent loss during the bake. Throws
// std::domain_error when the volume would demand more than a hemisphere.
CapGeometry reflow_predict(const ResistCylinder& cyl, double retention = 1.0);

// Resist thickness that reflows to the given sag; exact closed-form inverse
// of reflow_predict.
double reflow_required_thickness(double diameter_um, double target_sag_um,
                                 double retention = 1.0);

}  // namespace mla
