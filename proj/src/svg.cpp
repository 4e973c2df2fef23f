#include "nacart/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <vector>

namespace nacart {

namespace {

constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                    "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2df8a"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Frame {
  double x0, y0, w, h;  // plot area in pixels
  double lo, hi;        // data range on the value axis
  double map_y(double v) const { return y0 + h - (v - lo) / (hi - lo) * h; }
};

void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

void y_axis(std::ostream& os, const Frame& f, int ticks = 5) {
  os << "<line x1='" << num(f.x0) << "' y1='" << num(f.y0) << "' x2='" << num(f.x0) << "' y2='"
     << num(f.y0 + f.h) << "' stroke='black'/>\n";
  for (int t = 0; t <= ticks; ++t) {
    const double v = f.lo + (f.hi - f.lo) * t / ticks;
    const double y = f.map_y(v);
    char label[32];
    std::snprintf(label, sizeof label, "%.3g", v);
    os << "<line x1='" << num(f.x0 - 4) << "' y1='" << num(y) << "' x2='" << num(f.x0 + f.w) << "' y2='" << num(y)
       << "' stroke='#ddd'/>\n"
       << "<text x='" << num(f.x0 - 6) << "' y='" << num(y + 4) << "' font-size='11' text-anchor='end'>" << label
       << "</text>\n";
  }
}

void header(std::ostream& os, int w, int h) {
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "' viewBox='0 0 " << w << ' '
     << h << "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
}

void box_plot(std::span<const RunRecord> records, std::ostream& os) {
  const auto rel = relative_scores(records);
  std::vector<std::string> methods;
  std::map<std::string, std::vector<double>> by;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!by.count(records[i].method)) methods.push_back(records[i].method);
    by[records[i].method].push_back(rel[i]);
  }
  double lo = *std::min_element(rel.begin(), rel.end());
  double hi = *std::max_element(rel.begin(), rel.end());
  pad_range(lo, hi);
  const int row_h = 36;
  const int height = 60 + row_h * static_cast<int>(methods.size()) + 40;
  header(os, 720, height);
  // Horizontal boxes: value axis along x.
  const double x0 = 170, w = 520, y0 = 40;
  auto map_x = [&](double v) { return x0 + (v - lo) / (hi - lo) * w; };
  os << "<text x='360' y='22' font-size='14' text-anchor='middle'>Relative explained variance</text>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = lo + (hi - lo) * t / 5;
    char label[32];
    std::snprintf(label, sizeof label, "%.3g", v);
    const double x = map_x(v);
    os << "<line x1='" << num(x) << "' y1='" << num(y0) << "' x2='" << num(x) << "' y2='"
       << num(y0 + row_h * methods.size()) << "' stroke='#ddd'/>\n"
       << "<text x='" << num(x) << "' y='" << num(y0 + row_h * methods.size() + 16)
       << "' font-size='11' text-anchor='middle'>" << label << "</text>\n";
  }
  if (lo < 0.0 && hi > 0.0) {
    os << "<line x1='" << num(map_x(0)) << "' y1='" << num(y0) << "' x2='" << num(map_x(0)) << "' y2='"
       << num(y0 + row_h * methods.size()) << "' stroke='black' stroke-dasharray='4 3'/>\n";
  }
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const auto& v = by[methods[k]];
    const double q1 = quantile(v, 0.25), q2 = quantile(v, 0.5), q3 = quantile(v, 0.75);
    const double iqr = q3 - q1;
    double wl = q1, wh = q3;
    for (double a : v) {
      if (a >= q1 - 1.5 * iqr) wl = std::min(wl, a);
      if (a <= q3 + 1.5 * iqr) wh = std::max(wh, a);
    }
    const double cy = y0 + row_h * (k + 0.5);
    const char* col = kPalette[k % 10];
    os << "<text x='" << num(x0 - 8) << "' y='" << num(cy + 4) << "' font-size='12' text-anchor='end'>"
       << escape(methods[k]) << "</text>\n";
    os << "<line x1='" << num(map_x(wl)) << "' y1='" << num(cy) << "' x2='" << num(map_x(wh)) << "' y2='" << num(cy)
       << "' stroke='" << col << "'/>\n";
    os << "<rect x='" << num(map_x(q1)) << "' y='" << num(cy - 11) << "' width='" << num(map_x(q3) - map_x(q1))
       << "' height='22' fill='" << col << "' fill-opacity='0.35' stroke='" << col << "'/>\n";
    os << "<line x1='" << num(map_x(q2)) << "' y1='" << num(cy - 11) << "' x2='" << num(map_x(q2)) << "' y2='"
       << num(cy + 11) << "' stroke='black' stroke-width='2'/>\n";
    for (double a : v) {
      if (a < wl || a > wh)
        os << "<circle cx='" << num(map_x(a)) << "' cy='" << num(cy) << "' r='2' fill='" << col << "'/>\n";
    }
  }
  os << "</svg>\n";
}

void curve_plot(std::span<const RunRecord> records, std::ostream& os) {
  std::vector<std::string> methods;
  std::map<std::string, std::map<std::size_t, std::vector<double>>> by;
  for (const auto& r : records) {
    if (!by.count(r.method)) methods.push_back(r.method);
    by[r.method][r.n_train].push_back(r.r2);
  }
  double lo = 1e300, hi = -1e300, nlo = 1e300, nhi = -1e300;
  for (const auto& r : records) {
    lo = std::min(lo, r.r2);
    hi = std::max(hi, r.r2);
    nlo = std::min(nlo, std::log10(static_cast<double>(r.n_train)));
    nhi = std::max(nhi, std::log10(static_cast<double>(r.n_train)));
  }
  pad_range(lo, hi);
  if (!(nhi > nlo)) {
    nlo -= 0.5;
    nhi += 0.5;
  }
  header(os, 720, 440);
  Frame f{70, 40, 480, 340, lo, hi};
  auto map_x = [&](double n) { return f.x0 + (std::log10(n) - nlo) / (nhi - nlo) * f.w; };
  os << "<text x='310' y='22' font-size='14' text-anchor='middle'>Test R2 against training size</text>\n";
  y_axis(os, f);
  for (const auto& [k, v] : by.begin()->second) {
    (void)v;
    const double x = map_x(static_cast<double>(k));
    os << "<text x='" << num(x) << "' y='" << num(f.y0 + f.h + 16) << "' font-size='11' text-anchor='middle'>" << k
       << "</text>\n";
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const char* col = kPalette[m % 10];
    std::string upper, lower, mid;
    for (const auto& [n, v] : by[methods[m]]) {
      const double x = map_x(static_cast<double>(n));
      upper += num(x) + "," + num(f.map_y(quantile(v, 0.75))) + " ";
      lower = num(x) + "," + num(f.map_y(quantile(v, 0.25))) + " " + lower;
      mid += num(x) + "," + num(f.map_y(quantile(v, 0.5))) + " ";
    }
    os << "<polygon points='" << upper << lower << "' fill='" << col << "' fill-opacity='0.2' stroke='none'/>\n";
    os << "<polyline points='" << mid << "' fill='none' stroke='" << col << "' stroke-width='2'/>\n";
    os << "<text x='" << num(f.x0 + f.w + 12) << "' y='" << num(f.y0 + 16 * (m + 1)) << "' font-size='12' fill='"
       << col << "'>" << escape(methods[m]) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw DataError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

PlotKind parse_plot_kind(const std::string& s) {
  if (s == "box") return PlotKind::Box;
  if (s == "curve") return PlotKind::Curve;
  throw ConfigError("unknown plot kind '" + s + "' (expected box|curve)");
}

void emit_svg(std::span<const RunRecord> records, std::ostream& os, PlotKind kind) {
  if (records.empty()) throw DataError("svg: no records");
  if (kind == PlotKind::Box) box_plot(records, os);
  else curve_plot(records, os);
}

void emit_svg(std::span<const RunRecord> records, const std::string& path, PlotKind kind) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  emit_svg(records, os, kind);
}

void emit_theory_svg(std::span<const TheoryPoint> points, std::ostream& os) {
  if (points.empty()) throw DataError("svg: no theory points");
  std::vector<double> etas;
  for (const auto& t : points) {
    if (std::find(etas.begin(), etas.end(), t.eta) == etas.end()) etas.push_back(t.eta);
  }
  double lo = 1e300, hi = -1e300;
  for (const auto& t : points) {
    for (double v : {t.risk_mia, t.risk_block, t.risk_prob, t.risk_surr}) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  pad_range(lo, hi);
  const double pw = 300, ph = 260;
  const int width = static_cast<int>(80 + (pw + 40) * etas.size());
  header(os, width, 360);
  const char* names[] = {"MIA", "block", "probabilistic", "surrogate"};
  for (std::size_t e = 0; e < etas.size(); ++e) {
    Frame f{70 + (pw + 40) * e, 40, pw, ph, lo, hi};
    char title[48];
    std::snprintf(title, sizeof title, "eta = %g", etas[e]);
    os << "<text x='" << num(f.x0 + pw / 2) << "' y='28' font-size='13' text-anchor='middle'>" << title << "</text>\n";
    y_axis(os, f);
    for (int t = 0; t <= 4; ++t) {
      const double x = f.x0 + f.w * t / 4;
      os << "<text x='" << num(x) << "' y='" << num(f.y0 + f.h + 16) << "' font-size='11' text-anchor='middle'>"
         << num(t / 4.0) << "</text>\n";
    }
    for (int k = 0; k < 4; ++k) {
      std::string pts;
      for (const auto& t : points) {
        if (t.eta != etas[e]) continue;
        const double v = k == 0 ? t.risk_mia : k == 1 ? t.risk_block : k == 2 ? t.risk_prob : t.risk_surr;
        pts += num(f.x0 + t.p * f.w) + "," + num(f.map_y(v)) + " ";
      }
      os << "<polyline points='" << pts << "' fill='none' stroke='" << kPalette[k] << "' stroke-width='2'/>\n";
    }
  }
  for (int k = 0; k < 4; ++k) {
    os << "<text x='" << 80 + 130 * k << "' y='340' font-size='12' fill='" << kPalette[k] << "'>" << names[k]
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace nacart
