#pragma once

#include <string>
#include <vector>

namespace dldr {

// Minimal line/scatter plot emitter. CSV artifacts are authoritative; these
// plots exist for quick visual inspection only. Output carries no
// timestamps, so reruns are byte-identical.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void add_line(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& color, const std::string& label = "");
  void add_points(const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& color, const std::string& label = "");

  std::string render() const;

 private:
  struct Series {
    std::vector<double> x, y;
    std::string color;
    std::string label;
    bool points = false;
  };
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
};

}  // namespace dldr
