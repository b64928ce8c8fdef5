#include "motorprim/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace motorprim::svg {

namespace {

constexpr int kPanelHeight = 260;
constexpr int kTitleHeight = 34;
constexpr int kMarginLeft = 70, kMarginRight = 130, kMarginTop = 28, kMarginBottom = 40;
constexpr std::size_t kMaxPoints = 2000;

const std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && (std::abs(v) >= 1e4 || std::abs(v) < 1e-3)) {
    std::snprintf(buf, sizeof buf, "%.1e", v);
  } else {
    std::snprintf(buf, sizeof buf, "%g", v);
  }
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

// viridis-like ramp through five anchors
std::string ramp(double u) {
  static const double c[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  u = std::clamp(u, 0.0, 1.0) * 4.0;
  int k = std::min(3, static_cast<int>(u));
  double f = u - k;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(c[k][0] + f * (c[k + 1][0] - c[k][0]))),
                static_cast<int>(std::lround(c[k][1] + f * (c[k + 1][1] - c[k][1]))),
                static_cast<int>(std::lround(c[k][2] + f * (c[k + 1][2] - c[k][2]))));
  return buf;
}

struct Frame {
  double x0, y0, w, h;  // plot box in pixels
  Range rx, ry;
  double px(double x) const { return x0 + (x - rx.lo) / (rx.hi - rx.lo) * w; }
  double py(double y) const { return y0 + h - (y - ry.lo) / (ry.hi - ry.lo) * h; }
};

void axes(std::ostringstream& os, const Frame& f, const std::string& title, const std::string& xl,
          const std::string& yl) {
  os << "<rect x=\"" << num(f.x0) << "\" y=\"" << num(f.y0) << "\" width=\"" << num(f.w)
     << "\" height=\"" << num(f.h) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (double t : nice_ticks(f.rx.lo, f.rx.hi)) {
    double x = f.px(t);
    os << "<line x1=\"" << num(x) << "\" y1=\"" << num(f.y0 + f.h) << "\" x2=\"" << num(x)
       << "\" y2=\"" << num(f.y0 + f.h + 4) << "\" stroke=\"#444\"/>"
       << "<text x=\"" << num(x) << "\" y=\"" << num(f.y0 + f.h + 16)
       << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
  }
  for (double t : nice_ticks(f.ry.lo, f.ry.hi)) {
    double y = f.py(t);
    os << "<line x1=\"" << num(f.x0 - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(f.x0)
       << "\" y2=\"" << num(y) << "\" stroke=\"#444\"/>"
       << "<text x=\"" << num(f.x0 - 7) << "\" y=\"" << num(y + 4)
       << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
  }
  os << "<text x=\"" << num(f.x0 + f.w / 2) << "\" y=\"" << num(f.y0 - 9)
     << "\" text-anchor=\"middle\" font-weight=\"bold\">" << escape(title) << "</text>\n";
  os << "<text x=\"" << num(f.x0 + f.w / 2) << "\" y=\"" << num(f.y0 + f.h + 32)
     << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  os << "<text transform=\"translate(" << num(f.x0 - 52) << "," << num(f.y0 + f.h / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

void polyline(std::ostringstream& os, const Frame& f, const Series& s, const char* color) {
  const std::size_t n = std::min(s.x.size(), s.y.size());
  if (n == 0) return;
  const std::size_t stride = std::max<std::size_t>(1, n / kMaxPoints);
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.4\" points=\"";
  for (std::size_t k = 0; k < n; k += stride) {
    if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
    os << num(f.px(s.x[k])) << ',' << num(f.py(s.y[k])) << ' ';
  }
  if ((n - 1) % stride != 0) os << num(f.px(s.x[n - 1])) << ',' << num(f.py(s.y[n - 1]));
  os << "\"/>\n";
}

void legend(std::ostringstream& os, const Frame& f, const std::vector<Series>& series) {
  double y = f.y0 + 6;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].label.empty()) continue;
    const char* color = kColors[i % kColors.size()];
    os << "<line x1=\"" << num(f.x0 + f.w + 10) << "\" y1=\"" << num(y) << "\" x2=\""
       << num(f.x0 + f.w + 28) << "\" y2=\"" << num(y) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/><text x=\"" << num(f.x0 + f.w + 32) << "\" y=\"" << num(y + 4)
       << "\">" << escape(series[i].label) << "</text>\n";
    y += 16;
  }
}

void render_line(std::ostringstream& os, const LinePanel& p, double top, int width) {
  Frame f{kMarginLeft, top + kMarginTop, double(width - kMarginLeft - kMarginRight),
          double(kPanelHeight - kMarginTop - kMarginBottom), {}, {}};
  for (const auto& s : p.series) {
    for (double v : s.x) f.rx.add(v);
    for (double v : s.y) f.ry.add(v);
  }
  f.rx.finish();
  f.ry.finish();
  if (p.equal_aspect) {
    // widen whichever range is short so one unit spans the same pixels
    double sx = (f.rx.hi - f.rx.lo) / f.w, sy = (f.ry.hi - f.ry.lo) / f.h;
    double s = std::max(sx, sy);
    double cx = 0.5 * (f.rx.lo + f.rx.hi), cy = 0.5 * (f.ry.lo + f.ry.hi);
    f.rx = {cx - 0.5 * s * f.w, cx + 0.5 * s * f.w};
    f.ry = {cy - 0.5 * s * f.h, cy + 0.5 * s * f.h};
  }
  axes(os, f, p.title, p.x_label, p.y_label);
  for (std::size_t i = 0; i < p.series.size(); ++i) polyline(os, f, p.series[i], kColors[i % kColors.size()]);
  legend(os, f, p.series);
}

void render_heat(std::ostringstream& os, const HeatPanel& p, double top, int width) {
  if (p.values.rows() != static_cast<Eigen::Index>(p.xs.size()) ||
      p.values.cols() != static_cast<Eigen::Index>(p.ys.size()) || p.xs.size() < 2 || p.ys.size() < 2) {
    throw std::invalid_argument("heat map: grid and values disagree");
  }
  Frame f{kMarginLeft, top + kMarginTop, double(width - kMarginLeft - kMarginRight),
          double(kPanelHeight - kMarginTop - kMarginBottom), {}, {}};
  const double dx = p.xs[1] - p.xs[0], dy = p.ys[1] - p.ys[0];
  f.rx = {p.xs.front(), p.xs.back() + dx};
  f.ry = {p.ys.front(), p.ys.back() + dy};
  Range v;
  for (Eigen::Index i = 0; i < p.values.size(); ++i) v.add(p.values.data()[i]);
  v.finish();
  const double cw = f.w / p.xs.size() + 0.05, ch = f.h / p.ys.size() + 0.05;
  os << "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t a = 0; a < p.xs.size(); ++a) {
    for (std::size_t b = 0; b < p.ys.size(); ++b) {
      double u = (p.values(a, b) - v.lo) / (v.hi - v.lo);
      os << "<rect x=\"" << num(f.px(p.xs[a])) << "\" y=\"" << num(f.py(p.ys[b] + dy)) << "\" width=\""
         << num(cw) << "\" height=\"" << num(ch) << "\" fill=\"" << ramp(u) << "\"/>\n";
    }
  }
  os << "</g>\n";
  axes(os, f, p.title, p.x_label, p.y_label);
  for (std::size_t i = 0; i < p.overlays.size(); ++i) {
    const char* color = kColors[i % kColors.size()];
    const Series& s = p.overlays[i];
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      os << "<circle cx=\"" << num(f.px(s.x[k])) << "\" cy=\"" << num(f.py(s.y[k]))
         << "\" r=\"2.2\" fill=\"" << color << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
  }
  // color bar
  const double bx = f.x0 + f.w + 12, bw = 14;
  for (int k = 0; k < 50; ++k) {
    double y = f.y0 + f.h - (k + 1) * f.h / 50.0;
    os << "<rect x=\"" << num(bx) << "\" y=\"" << num(y) << "\" width=\"" << num(bw)
       << "\" height=\"" << num(f.h / 50.0 + 0.05) << "\" fill=\"" << ramp((k + 0.5) / 50.0) << "\"/>\n";
  }
  os << "<text x=\"" << num(bx + bw + 4) << "\" y=\"" << num(f.y0 + 10) << "\">" << tick_label(v.hi)
     << "</text><text x=\"" << num(bx + bw + 4) << "\" y=\"" << num(f.y0 + f.h) << "\">"
     << tick_label(v.lo) << "</text>\n";
}

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, int target) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

void Figure::add(LinePanel p) { items_.push_back({false, std::move(p), {}}); }

void Figure::add(HeatPanel p) { items_.push_back({true, {}, std::move(p)}); }

std::string Figure::render() const {
  const int height = kTitleHeight + kPanelHeight * static_cast<int>(items_.size());
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width_ << ' ' << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << width_ / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title_) << "</text>\n";
  double top = kTitleHeight;
  for (const auto& it : items_) {
    if (it.heat) {
      render_heat(os, it.map, top, width_);
    } else {
      render_line(os, it.line, top, width_);
    }
    top += kPanelHeight;
  }
  os << "</svg>\n";
  return os.str();
}

void Figure::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << render();
}

}  // namespace motorprim::svg
