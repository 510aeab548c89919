#pragma once
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mla/raytrace.hpp"
#include "mla/tolerance.hpp"

// Deterministic output: JSON with caller-fixed key order and 9-significant-
// digit floats, CSV for bulk ray data, minimal labeled SVG plots. Identical
// inputs always produce byte-identical text.

namespace mla {

// %.9g with negative zero normalized away; "nan"/"inf" spelled lowercase.
std::string format_double(double v);

// Ordered streaming JSON writer. Keys appear exactly in emission order.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);
  JsonWriter& value(double v);  // non-finite values become null
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& null_value();

  const std::string& str() const { return out_; }

 private:
  void separator();
  std::string out_;
  std::vector<bool> first_in_scope_;
  bool pending_key_ = false;
};

const char* fan_kind_label(FanKind k);  // "ray_fan_um" / "opd_fan_waves"

// ray_id,pupil_x,pupil_y,image_x_um,image_y_um,alive
void write_spot_csv(std::ostream& os, const SpotDiagram& spot);
// pupil,value,kind
void write_fan_csv(std::ostream& os, const FanCurve& fan);
// sample,na,rms_um,geo_um,focus_shift_um,failed
void write_mc_csv(std::ostream& os, const std::vector<SampleMetrics>& rows);

std::string spot_svg(const SpotDiagram& spot);
std::string fan_svg(const FanCurve& fan);

}  // namespace mla
