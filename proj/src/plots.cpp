// plot-data emission: delimited series for the polar fin trajectory and the
// force moving average, plus small self-contained svg renderings. everything
// is a pure function of the trace, so repeated runs are byte-identical.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "softfin/csvio.hpp"
#include "softfin/eval.hpp"
#include "softfin/metrics.hpp"

namespace softfin {

namespace {

constexpr std::size_t kPolarTicks = 500;   // first 5 s at 100 hz
constexpr std::size_t kForceTicks = 1000;  // first 10 s

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* color,
                     double width) {
  std::string s = "  <polyline fill=\"none\" stroke=\"";
  s += color;
  s += "\" stroke-width=\"" + num(width) + "\" points=\"";
  for (const auto& [x, y] : pts) s += num(x) + "," + num(y) + " ";
  s += "\"/>\n";
  return s;
}

std::string text_at(double x, double y, const std::string& t, const char* anchor = "middle") {
  return "  <text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"" +
         anchor + "\" fill=\"#444\">" + t + "</text>\n";
}

void write_polar_svg(const std::filesystem::path& path, const LogData& trace) {
  const double cx = 200.0, cy = 200.0, r0 = 30.0, r1 = 170.0;
  std::ofstream os = open_out(path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" "
        "viewBox=\"0 0 400 400\">\n";
  os << "  <rect width=\"400\" height=\"400\" fill=\"white\"/>\n";
  for (double r : {50.0, 100.0, 150.0})
    os << "  <circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
       << "\" fill=\"none\" stroke=\"#ddd\"/>\n";
  for (int deg = -90; deg <= 90; deg += 45) {
    const double a = double(deg) * M_PI / 180.0;
    const double x = cx + r1 * std::sin(a), y = cy - r1 * std::cos(a);
    os << "  <line x1=\"" << num(cx) << "\" y1=\"" << num(cy) << "\" x2=\"" << num(x)
       << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n";
    os << text_at(cx + (r1 + 14.0) * std::sin(a), cy - (r1 + 14.0) * std::cos(a) + 4.0,
                  std::to_string(deg));
  }
  // radius encodes time (0 -> 5 s), angle is the base angle
  std::vector<std::pair<double, double>> pts;
  pts.reserve(kPolarTicks);
  for (std::size_t i = 0; i < kPolarTicks; ++i) {
    const double r = r0 + (r1 - r0) * double(i) / double(kPolarTicks - 1);
    pts.push_back({cx + r * std::sin(trace.theta[i]), cy - r * std::cos(trace.theta[i])});
  }
  os << polyline(pts, "#c02020", 1.5);
  os << text_at(cx, 392.0, "base angle (deg), radius = time 0-5 s");
  os << "</svg>\n";
}

void write_force_svg(const std::filesystem::path& path, const LogData& trace,
                     const std::vector<double>& ma_x, const std::vector<double>& ma_y) {
  const double w = 800.0, h = 400.0, ml = 60.0, mr = 15.0, mt = 15.0, mb = 45.0;
  double lo = trace.fx[0], hi = lo;
  for (std::size_t i = 0; i < kForceTicks; ++i) {
    lo = std::min({lo, trace.fx[i], trace.fy[i]});
    hi = std::max({hi, trace.fx[i], trace.fy[i]});
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const auto px = [&](std::size_t i) {
    return ml + (w - ml - mr) * double(i) / double(kForceTicks - 1);
  };
  const auto py = [&](double v) { return mt + (h - mt - mb) * (hi - v) / (hi - lo); };
  const auto series = [&](const std::vector<double>& v) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(kForceTicks);
    for (std::size_t i = 0; i < kForceTicks; ++i) pts.push_back({px(i), py(v[i])});
    return pts;
  };

  std::ofstream os = open_out(path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"400\" "
        "viewBox=\"0 0 800 400\">\n";
  os << "  <rect width=\"800\" height=\"400\" fill=\"white\"/>\n";
  for (int sec = 0; sec <= 10; sec += 2) {
    const double x = ml + (w - ml - mr) * double(sec) / 10.0;
    os << "  <line x1=\"" << num(x) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(x) << "\" y2=\""
       << num(h - mb) << "\" stroke=\"#eee\"/>\n";
    os << text_at(x, h - mb + 16.0, std::to_string(sec));
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * double(i) / 4.0;
    const double y = py(v);
    os << "  <line x1=\"" << num(ml) << "\" y1=\"" << num(y) << "\" x2=\"" << num(w - mr)
       << "\" y2=\"" << num(y) << "\" stroke=\"#eee\"/>\n";
    os << text_at(ml - 8.0, y + 4.0, num(v), "end");
  }
  os << polyline(series(std::vector<double>(trace.fx.begin(), trace.fx.begin() + kForceTicks)),
                 "#f0b0b0", 0.8);
  os << polyline(series(std::vector<double>(trace.fy.begin(), trace.fy.begin() + kForceTicks)),
                 "#b0b0f0", 0.8);
  os << polyline(series(ma_x), "#c02020", 1.8);
  os << polyline(series(ma_y), "#2020c0", 1.8);
  os << text_at(ml + 40.0, mt + 14.0, "Fx / mean", "start");
  os << text_at(ml + 130.0, mt + 14.0, "Fy / mean", "start");
  os << text_at(w / 2.0, h - 8.0, "time (s), raw force and trailing moving average (N)");
  os << "</svg>\n";
}

}  // namespace

void emit_plots(const LogData& trace, const std::filesystem::path& dir, std::size_t ma_window) {
  if (trace.size() < kForceTicks)
    throw std::invalid_argument("emit_plots: trace has " + std::to_string(trace.size()) +
                                " ticks, need >= " + std::to_string(kForceTicks) + " (10 s)");
  std::filesystem::create_directories(dir);

  std::vector<std::vector<double>> polar_rows;
  polar_rows.reserve(kPolarTicks);
  for (std::size_t i = 0; i < kPolarTicks; ++i)
    polar_rows.push_back({trace.t[i], trace.theta[i] * 180.0 / M_PI});
  csv::write(dir / "polar.csv", {"t", "theta_deg"}, polar_rows);

  const std::vector<double> fx(trace.fx.begin(), trace.fx.begin() + kForceTicks);
  const std::vector<double> fy(trace.fy.begin(), trace.fy.begin() + kForceTicks);
  const std::vector<double> ma_x = metrics::moving_average(fx, ma_window);
  const std::vector<double> ma_y = metrics::moving_average(fy, ma_window);
  std::vector<std::vector<double>> force_rows;
  force_rows.reserve(kForceTicks);
  for (std::size_t i = 0; i < kForceTicks; ++i)
    force_rows.push_back({trace.t[i], fx[i], fy[i], ma_x[i], ma_y[i]});
  csv::write(dir / "force.csv", {"t", "fx", "fy", "ma_fx", "ma_fy"}, force_rows);

  write_polar_svg(dir / "polar.svg", trace);
  write_force_svg(dir / "force.svg", trace, ma_x, ma_y);
}

}  // namespace softfin
