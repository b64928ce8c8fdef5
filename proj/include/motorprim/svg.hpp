#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace motorprim::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Lines against a shared x axis, or an x-y path drawn with equal axis scales.
struct LinePanel {
  std::string title, x_label, y_label;
  std::vector<Series> series;
  bool equal_aspect = false;
};

/// Values on a grid drawn as one rectangle per cell, xs along the horizontal
/// axis; `values` is xs.size() x ys.size(). Optional markers are drawn on top.
struct HeatPanel {
  std::string title, x_label, y_label;
  std::vector<double> xs, ys;
  Eigen::MatrixXd values;
  std::vector<Series> overlays;
};

/// Stacked panels in one self-contained SVG document.
class Figure {
 public:
  explicit Figure(std::string title, int width = 720) : title_(std::move(title)), width_(width) {}
  void add(LinePanel p);
  void add(HeatPanel p);
  std::string render() const;
  void save(const std::string& path) const;

 private:
  struct Item {
    bool heat;
    LinePanel line;
    HeatPanel map;
  };
  std::string title_;
  int width_;
  std::vector<Item> items_;
};

/// Round tick positions covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 5);

}  // namespace motorprim::svg
