#include "dldr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dldr/textio.hpp"

namespace dldr {

namespace {
constexpr double kWidth = 800, kHeight = 560;
constexpr double kLeft = 80, kRight = 30, kTop = 50, kBottom = 60;

std::string num(double v) { return fmt_short(v); }

// A handful of round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  if (!(hi > lo)) return {lo};
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step)
    out.push_back(t);
  return out;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)),
      x_label_(std::move(x_label)),
      y_label_(std::move(y_label)) {}

void SvgPlot::add_line(const std::vector<double>& x,
                       const std::vector<double>& y, const std::string& color,
                       const std::string& label) {
  series_.push_back({x, y, color, label, false});
}

void SvgPlot::add_points(const std::vector<double>& x,
                         const std::vector<double>& y,
                         const std::string& color, const std::string& label) {
  series_.push_back({x, y, color, label, true});
}

std::string SvgPlot::render() const {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const auto& s : series_) {
    for (double v : s.x) {
      x0 = std::min(x0, v);
      x1 = std::max(x1, v);
    }
    for (double v : s.y) {
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double ypad = 0.05 * (y1 - y0);
  y0 -= ypad;
  y1 += ypad;

  auto px = [&](double x) {
    return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
  };
  auto py = [&](double y) {
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
       "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) +
       " " + num(kHeight) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) +
       "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
       "font-family=\"sans-serif\">" +
       title_ + "</text>\n";

  for (double t : ticks(x0, x1)) {
    const double gx = px(t);
    s += "<line x1=\"" + num(gx) + "\" y1=\"" + num(kTop) + "\" x2=\"" +
         num(gx) + "\" y2=\"" + num(kHeight - kBottom) +
         "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + num(gx) + "\" y=\"" + num(kHeight - kBottom + 18) +
         "\" text-anchor=\"middle\" font-size=\"11\" "
         "font-family=\"sans-serif\">" +
         num(t) + "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    const double gy = py(t);
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(gy) + "\" x2=\"" +
         num(kWidth - kRight) + "\" y2=\"" + num(gy) +
         "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(gy + 4) +
         "\" text-anchor=\"end\" font-size=\"11\" "
         "font-family=\"sans-serif\">" +
         num(t) + "</text>\n";
  }
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" +
       num(kWidth - kLeft - kRight) + "\" height=\"" +
       num(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(kHeight - 16) +
       "\" text-anchor=\"middle\" font-size=\"13\" "
       "font-family=\"sans-serif\">" +
       x_label_ + "</text>\n";
  s += "<text x=\"20\" y=\"" + num(kHeight / 2) +
       "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
       "transform=\"rotate(-90 20 " +
       num(kHeight / 2) + ")\">" + y_label_ + "</text>\n";

  double legend_y = kTop + 16;
  for (const auto& ser : series_) {
    if (ser.points) {
      for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i)
        s += "<circle cx=\"" + num(px(ser.x[i])) + "\" cy=\"" +
             num(py(ser.y[i])) + "\" r=\"3\" fill=\"" + ser.color + "\"/>\n";
    } else {
      std::string pts;
      for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i)
        pts += num(px(ser.x[i])) + "," + num(py(ser.y[i])) + " ";
      s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
           ser.color + "\" stroke-width=\"1.5\"/>\n";
    }
    if (!ser.label.empty()) {
      s += "<line x1=\"" + num(kWidth - kRight - 150) + "\" y1=\"" +
           num(legend_y - 4) + "\" x2=\"" + num(kWidth - kRight - 122) +
           "\" y2=\"" + num(legend_y - 4) + "\" stroke=\"" + ser.color +
           "\" stroke-width=\"3\"/>\n";
      s += "<text x=\"" + num(kWidth - kRight - 116) + "\" y=\"" +
           num(legend_y) +
           "\" font-size=\"12\" font-family=\"sans-serif\">" + ser.label +
           "</text>\n";
      legend_y += 16;
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace dldr
