#include "mla/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mla {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // strip the sign off -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

}  // namespace

void JsonWriter::separator() {
  if (pending_key_) {
    pending_key_ = false;
    return;
  }
  if (!first_in_scope_.empty()) {
    if (!first_in_scope_.back()) out_ += ',';
    first_in_scope_.back() = false;
  }
}

JsonWriter& JsonWriter::begin_object() {
  separator();
  out_ += '{';
  first_in_scope_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  out_ += '}';
  first_in_scope_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  separator();
  out_ += '[';
  first_in_scope_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  out_ += ']';
  first_in_scope_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
  if (!first_in_scope_.empty()) {
    if (!first_in_scope_.back()) out_ += ',';
    first_in_scope_.back() = false;
  }
  out_ += '"';
  out_ += json_escape(k);
  out_ += "\":";
  pending_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  separator();
  if (!std::isfinite(v))
    out_ += "null";  // JSON has no NaN/inf
  else
    out_ += format_double(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
  separator();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  separator();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
  separator();
  out_ += '"';
  out_ += json_escape(v);
  out_ += '"';
  return *this;
}

JsonWriter& JsonWriter::null_value() {
  separator();
  out_ += "null";
  return *this;
}

const char* fan_kind_label(FanKind k) {
  return k == FanKind::ray_um ? "ray_fan_um" : "opd_fan_waves";
}

void write_spot_csv(std::ostream& os, const SpotDiagram& spot) {
  os << "ray_id,pupil_x,pupil_y,image_x_um,image_y_um,alive\n";
  for (const auto& s : spot.samples) {
    os << s.ray_id << ',' << format_double(s.pupil_x) << ','
       << format_double(s.pupil_y) << ',' << format_double(s.x_um) << ','
       << format_double(s.y_um) << ',' << (s.alive ? 1 : 0) << '\n';
  }
}

void write_fan_csv(std::ostream& os, const FanCurve& fan) {
  os << "pupil,value,kind\n";
  const char* kind = fan_kind_label(fan.kind);
  for (const auto& s : fan.samples) {
    os << format_double(s.pupil) << ',' << format_double(s.value) << ','
       << kind << '\n';
  }
}

void write_mc_csv(std::ostream& os, const std::vector<SampleMetrics>& rows) {
  os << "sample,na,rms_um,geo_um,focus_shift_um,failed\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& m = rows[i];
    os << i << ',' << format_double(m.na) << ',' << format_double(m.rms_um)
       << ',' << format_double(m.geo_um) << ','
       << format_double(m.focus_shift_um) << ',' << (m.failed ? 1 : 0)
       << '\n';
  }
}

namespace {

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  void widen(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  double span() const { return std::max(hi - lo, 1e-6); }
};

constexpr double kW = 480.0, kH = 400.0;     // canvas
constexpr double kL = 70.0, kR = 20.0;       // margins
constexpr double kT = 40.0, kB = 50.0;

double map_x(double v, const Range& r) {
  return kL + (v - r.lo) / r.span() * (kW - kL - kR);
}

double map_y(double v, const Range& r) {
  return kH - kB - (v - r.lo) / r.span() * (kH - kT - kB);
}

void svg_header(std::string& s, const std::string& title) {
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" "
       "height=\"400\" viewBox=\"0 0 480 400\">\n";
  s += "<rect width=\"480\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"240\" y=\"22\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"13\">" +
       json_escape(title) + "</text>\n";
}

void svg_axes(std::string& s, const Range& rx, const Range& ry,
              const std::string& xlabel, const std::string& ylabel) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                "stroke=\"black\"/>\n",
                kL, kH - kB, kW - kR, kH - kB);
  s += buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                "stroke=\"black\"/>\n",
                kL, kT, kL, kH - kB);
  s += buf;
  s += "<text x=\"" + format_double(kL) + "\" y=\"" +
       format_double(kH - kB + 16.0) + "\" font-family=\"sans-serif\" "
       "font-size=\"10\">" + format_double(rx.lo) + "</text>\n";
  s += "<text x=\"" + format_double(kW - kR) + "\" y=\"" +
       format_double(kH - kB + 16.0) + "\" text-anchor=\"end\" "
       "font-family=\"sans-serif\" font-size=\"10\">" + format_double(rx.hi) +
       "</text>\n";
  s += "<text x=\"" + format_double(kL - 6.0) + "\" y=\"" +
       format_double(kH - kB) + "\" text-anchor=\"end\" "
       "font-family=\"sans-serif\" font-size=\"10\">" + format_double(ry.lo) +
       "</text>\n";
  s += "<text x=\"" + format_double(kL - 6.0) + "\" y=\"" +
       format_double(kT + 4.0) + "\" text-anchor=\"end\" "
       "font-family=\"sans-serif\" font-size=\"10\">" + format_double(ry.hi) +
       "</text>\n";
  s += "<text x=\"" + format_double(0.5 * (kL + kW - kR)) + "\" y=\"" +
       format_double(kH - 12.0) + "\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"12\">" + json_escape(xlabel) +
       "</text>\n";
  s += "<text x=\"16\" y=\"" + format_double(0.5 * (kT + kH - kB)) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"12\" transform=\"rotate(-90 16 " +
       format_double(0.5 * (kT + kH - kB)) + ")\">" + json_escape(ylabel) +
       "</text>\n";
}

}  // namespace

std::string spot_svg(const SpotDiagram& spot) {
  Range rx, ry;
  bool any = false;
  for (const auto& s : spot.samples)
    if (s.alive) {
      if (!any) {
        rx = {s.x_um, s.x_um};
        ry = {s.y_um, s.y_um};
        any = true;
      } else {
        rx.widen(s.x_um);
        ry.widen(s.y_um);
      }
    }
  double pad_x = 0.1 * rx.span(), pad_y = 0.1 * ry.span();
  rx.lo -= pad_x;
  rx.hi += pad_x;
  ry.lo -= pad_y;
  ry.hi += pad_y;

  std::string s;
  svg_header(s, "spot at z=" + format_double(spot.image_z_um) +
                    " um, geo=" + format_double(spot.geo_radius_um) +
                    " um, rms=" + format_double(spot.rms_radius_um) + " um");
  svg_axes(s, rx, ry, "image x (um)", "image y (um)");
  for (const auto& p : spot.samples) {
    if (!p.alive) continue;
    s += "<circle cx=\"" + format_double(map_x(p.x_um, rx)) + "\" cy=\"" +
         format_double(map_y(p.y_um, ry)) +
         "\" r=\"1.5\" fill=\"steelblue\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string fan_svg(const FanCurve& fan) {
  Range rx{-1.0, 1.0}, ry;
  bool any = false;
  for (const auto& p : fan.samples)
    if (p.alive) {
      if (!any) {
        ry = {p.value, p.value};
        any = true;
      } else {
        ry.widen(p.value);
      }
    }
  double pad = 0.1 * ry.span();
  ry.lo -= pad;
  ry.hi += pad;

  bool is_ray = fan.kind == FanKind::ray_um;
  std::string s;
  svg_header(s, std::string(is_ray ? "ray fan" : "OPD fan") + " at z=" +
                    format_double(fan.reference_z_um) + " um");
  svg_axes(s, rx, ry, "pupil coordinate",
           is_ray ? "transverse aberration (um)" : "OPD (waves)");
  std::string pts;
  for (const auto& p : fan.samples) {
    if (!p.alive) continue;  // gaps collapse; dead samples are in the CSV
    pts += format_double(map_x(p.pupil, rx)) + "," +
           format_double(map_y(p.value, ry)) + " ";
  }
  s += "<polyline fill=\"none\" stroke=\"firebrick\" points=\"" + pts +
       "\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace mla
