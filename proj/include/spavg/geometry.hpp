#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "spavg/errors.hpp"

namespace spavg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Rectangular observation window [x0,x1] x [y0,y1].
struct Window {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  Window() = default;
  Window(double ax0, double ax1, double ay0, double ay1)
      : x0(ax0), x1(ax1), y0(ay0), y1(ay1) {
    if (!(x1 > x0) || !(y1 > y0))
      throw InvalidConfig("window sides must be positive");
  }

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double min_side() const { return std::min(width(), height()); }

  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  bool contains(const Point& p) const { return contains(p.x, p.y); }

  /// Grow the window by `d` on every side.
  Window dilated(double d) const {
    return Window(x0 - d, x1 + d, y0 - d, y1 + d);
  }

  bool operator==(const Window& o) const {
    return x0 == o.x0 && x1 == o.x1 && y0 == o.y0 && y1 == o.y1;
  }
};

/// Planar point set observed in a window.
struct PointPattern {
  std::vector<Point> points;
  Window window;

  PointPattern() = default;
  PointPattern(std::vector<Point> pts, Window w)
      : points(std::move(pts)), window(w) {
    for (const auto& p : points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !window.contains(p))
        throw InvalidConfig("point pattern contains a point outside its window");
    }
  }

  std::size_t size() const { return points.size(); }
  double intensity() const {
    return static_cast<double>(points.size()) / window.area();
  }
};

/// Union of discs: germs (possibly outside the window) plus radii.
struct GermGrainSet {
  std::vector<Point> germs;
  std::vector<double> radii;
  Window window;

  GermGrainSet() = default;
  GermGrainSet(std::vector<Point> g, std::vector<double> r, Window w)
      : germs(std::move(g)), radii(std::move(r)), window(w) {
    if (germs.size() != radii.size())
      throw DimensionMismatch("germ and radius lists differ in length");
    for (double rad : radii)
      if (!(rad > 0.0))
        throw InvalidConfig("grain radii must be positive");
  }

  std::size_t size() const { return germs.size(); }
};

/// Tabulated distance -> value curve (K(r), g(r), ...).
struct SummaryFunction {
  std::vector<double> r;
  std::vector<double> values;

  SummaryFunction() = default;
  SummaryFunction(std::vector<double> rg, std::vector<double> v)
      : r(std::move(rg)), values(std::move(v)) {
    if (r.size() != values.size())
      throw DimensionMismatch("summary grid and values differ in length");
    if (!r.empty() && r.front() < 0.0)
      throw InvalidConfig("summary grid must start at r >= 0");
    for (std::size_t i = 1; i < r.size(); ++i)
      if (!(r[i] > r[i - 1]))
        throw InvalidConfig("summary grid must be strictly increasing");
  }

  std::size_t size() const { return r.size(); }
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) /
                      static_cast<double>(n - 1);
  return out;
}

/// Pixel grid of intensity values over a window, row-major with index
/// ix + iy*nx; values are evaluated at pixel centers.
struct IntensityField {
  Window window;
  int nx = 0, ny = 0;
  std::vector<double> values;

  IntensityField() = default;
  IntensityField(Window w, int anx, int any)
      : window(w), nx(anx), ny(any),
        values(static_cast<std::size_t>(anx) * any, 0.0) {
    if (nx < 2 || ny < 2) throw InvalidConfig("field needs at least 2x2 pixels");
  }

  double dx() const { return window.width() / nx; }
  double dy() const { return window.height() / ny; }
  double pixel_area() const { return dx() * dy(); }
  double pixel_x(int ix) const { return window.x0 + (ix + 0.5) * dx(); }
  double pixel_y(int iy) const { return window.y0 + (iy + 0.5) * dy(); }

  double& at(int ix, int iy) { return values[ix + static_cast<std::size_t>(iy) * nx]; }
  double at(int ix, int iy) const {
    return values[ix + static_cast<std::size_t>(iy) * nx];
  }

  bool same_grid(const IntensityField& o) const {
    return nx == o.nx && ny == o.ny && window == o.window;
  }

  /// Nearest-pixel lookup for (x, y) inside the window.
  double value_at(double x, double y) const {
    int ix = static_cast<int>((x - window.x0) / dx());
    int iy = static_cast<int>((y - window.y0) / dy());
    ix = std::clamp(ix, 0, nx - 1);
    iy = std::clamp(iy, 0, ny - 1);
    return at(ix, iy);
  }

  double max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

}  // namespace spavg
