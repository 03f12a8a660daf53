#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "spavg/errors.hpp"
#include "spavg/geometry.hpp"

namespace spavg {

inline constexpr double kPi = 3.14159265358979323846;

/// Translation edge correction |W| / |W intersect (W + x_j - x_i)| on a
/// rectangle.
inline double translation_correction(const Window& w, double dx, double dy) {
  const double ox = w.width() - std::abs(dx);
  const double oy = w.height() - std::abs(dy);
  if (ox <= 0.0 || oy <= 0.0)
    throw RangeTooLarge("pair separation exceeds the window");
  return w.area() / (ox * oy);
}

/// Ripley's K with translation edge correction.  For the inhomogeneous
/// version pass the fitted intensity at each point; otherwise the pair
/// weight is |W|^2/(n(n-1)), the unbiased normalisation for a stationary
/// process.
inline SummaryFunction ripley_k(
    const PointPattern& pattern, const std::vector<double>& rgrid,
    const std::optional<std::vector<double>>& point_intensity = std::nullopt) {
  const std::size_t n = pattern.size();
  if (n < 2) throw TooFewPoints("Ripley's K needs at least 2 points");
  if (rgrid.empty()) throw InvalidConfig("empty r grid");
  const double rmax = rgrid.back();
  if (rmax > pattern.window.min_side() / 4.0 + 1e-12)
    throw RangeTooLarge("max r exceeds a quarter of the shorter window side");
  if (point_intensity && point_intensity->size() != n)
    throw DimensionMismatch("per-point intensities do not match the pattern");

  const Window& w = pattern.window;
  const double area = w.area();
  // lambda^2 estimated by n(n-1)/|W|^2, the unbiased pair normalisation
  const double lambda2 =
      static_cast<double>(n) * static_cast<double>(n - 1) / (area * area);

  // bucket pair contributions by the first grid value >= distance
  std::vector<double> bucket(rgrid.size(), 0.0);
  const double rmax2 = rmax * rmax;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = pattern.points[j].x - pattern.points[i].x;
      const double dy = pattern.points[j].y - pattern.points[i].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > rmax2) continue;
      const double d = std::sqrt(d2);
      const double e = translation_correction(w, dx, dy);
      double pw;
      if (point_intensity)
        pw = 1.0 / ((*point_intensity)[i] * (*point_intensity)[j]);
      else
        pw = 1.0 / lambda2;
      const auto it = std::lower_bound(rgrid.begin(), rgrid.end(), d);
      if (it == rgrid.end()) continue;
      bucket[it - rgrid.begin()] += 2.0 * pw * e;  // both ordered pairs
    }
  }
  std::vector<double> values(rgrid.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < rgrid.size(); ++k) {
    acc += bucket[k];
    values[k] = acc / area;
  }
  return SummaryFunction(rgrid, values);
}

/// Stoyan's rule-of-thumb bandwidth for the pcf.
inline double stoyan_bandwidth(const PointPattern& pattern) {
  return 0.15 / std::sqrt(pattern.intensity());
}

/// Pair correlation function by Epanechnikov smoothing of pair
/// distances, translation edge correction, pair-distance divisor.
inline SummaryFunction pcf_estimate(
    const PointPattern& pattern, const std::vector<double>& rgrid,
    std::optional<double> bandwidth = std::nullopt,
    const std::optional<std::vector<double>>& point_intensity = std::nullopt) {
  const std::size_t n = pattern.size();
  if (n < 2) throw TooFewPoints("pcf needs at least 2 points");
  if (rgrid.empty()) throw InvalidConfig("empty r grid");
  for (double r : rgrid)
    if (!(r > 0.0)) throw NonpositiveR("pcf grid values must be positive");
  if (point_intensity && point_intensity->size() != n)
    throw DimensionMismatch("per-point intensities do not match the pattern");

  const Window& w = pattern.window;
  const double area = w.area();
  const double lambda2 =
      static_cast<double>(n) * static_cast<double>(n - 1) / (area * area);
  const double b = bandwidth.value_or(stoyan_bandwidth(pattern));

  std::vector<double> sums(rgrid.size(), 0.0);
  const double dmax = rgrid.back() + b;
  const double dmax2 = dmax * dmax;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = pattern.points[j].x - pattern.points[i].x;
      const double dy = pattern.points[j].y - pattern.points[i].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > dmax2) continue;
      const double d = std::sqrt(d2);
      const double e = translation_correction(w, dx, dy);
      double pw;
      if (point_intensity)
        pw = 1.0 / ((*point_intensity)[i] * (*point_intensity)[j]);
      else
        pw = 1.0 / lambda2;
      // both ordered pairs; dividing by the observed pair distance
      // instead of the grid radius stabilises the estimate at small r
      const double c = 2.0 * pw * e / d;
      // grid points inside the kernel support
      const auto lo = std::lower_bound(rgrid.begin(), rgrid.end(), d - b);
      for (auto it = lo; it != rgrid.end() && *it < d + b; ++it) {
        const double t = (*it - d) / b;
        sums[it - rgrid.begin()] += c * 0.75 * (1.0 - t * t) / b;
      }
    }
  }
  std::vector<double> values(rgrid.size());
  for (std::size_t k = 0; k < rgrid.size(); ++k)
    values[k] = sums[k] / (2.0 * kPi * area);
  return SummaryFunction(rgrid, values);
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Mass of the Gaussian kernel of sd b centered at (x, y) inside w.
inline double gaussian_window_mass(const Window& w, double x, double y,
                                   double b) {
  const double mx = normal_cdf((w.x1 - x) / b) - normal_cdf((w.x0 - x) / b);
  const double my = normal_cdf((w.y1 - y) / b) - normal_cdf((w.y0 - y) / b);
  return mx * my;
}

}  // namespace detail

/// Gaussian kernel intensity estimate with uniform edge correction,
/// evaluated at pixel centers.  Empty patterns give the zero field.
inline IntensityField kernel_intensity(const PointPattern& pattern, int nx,
                                       int ny, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidConfig("bandwidth must be positive");
  IntensityField field(pattern.window, nx, ny);
  const double b = bandwidth;
  const double dx = field.dx(), dy = field.dy();
  const double norm = 1.0 / (2.0 * kPi * b * b);
  const double cutoff = 6.0 * b;

  std::vector<double> gx(nx), gy(ny);
  for (const auto& p : pattern.points) {
    const double c = detail::gaussian_window_mass(pattern.window, p.x, p.y, b);
    const double scale = norm / c;
    const int ix_lo = std::max(
        0, static_cast<int>((p.x - cutoff - pattern.window.x0) / dx));
    const int ix_hi = std::min(
        nx - 1, static_cast<int>((p.x + cutoff - pattern.window.x0) / dx));
    const int iy_lo = std::max(
        0, static_cast<int>((p.y - cutoff - pattern.window.y0) / dy));
    const int iy_hi = std::min(
        ny - 1, static_cast<int>((p.y + cutoff - pattern.window.y0) / dy));
    if (ix_lo > ix_hi || iy_lo > iy_hi) continue;
    for (int ix = ix_lo; ix <= ix_hi; ++ix) {
      const double u = (field.pixel_x(ix) - p.x) / b;
      gx[ix] = std::exp(-0.5 * u * u);
    }
    for (int iy = iy_lo; iy <= iy_hi; ++iy) {
      const double v = (field.pixel_y(iy) - p.y) / b;
      gy[iy] = std::exp(-0.5 * v * v);
    }
    for (int iy = iy_lo; iy <= iy_hi; ++iy) {
      const double row = scale * gy[iy];
      double* dst = &field.at(ix_lo, iy);
      for (int ix = ix_lo; ix <= ix_hi; ++ix) *dst++ += row * gx[ix];
    }
  }
  return field;
}

enum class BandwidthRule { default_rule, diggle, ppl };

/// Candidate grid shared by the data-driven bandwidth selectors.
inline std::vector<double> bandwidth_candidates(const Window& w, int n = 32) {
  const double lo = w.min_side() / 200.0;
  const double hi = w.min_side() / 4.0;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return out;
}

namespace detail {

struct PairTable {
  std::vector<double> d;   // pair distances (unordered pairs)
  std::vector<double> e;   // translation corrections
};

inline PairTable pair_table(const PointPattern& pattern, double dmax) {
  PairTable t;
  const std::size_t n = pattern.size();
  const double dmax2 = dmax * dmax;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = pattern.points[j].x - pattern.points[i].x;
      const double dy = pattern.points[j].y - pattern.points[i].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > dmax2) continue;
      t.d.push_back(std::sqrt(d2));
      t.e.push_back(translation_correction(pattern.window, dx, dy));
    }
  return t;
}

/// Berman-Diggle mean-square-error criterion for a disc kernel of
/// radius h, computed from edge-corrected pair distances (the empirical
/// K-function increments).  The constant lambda^2 g(0) term is dropped:
///   M(h) = lambda/(pi h^2) + integral of gamma_h dK / (pi h^2)^2
///          - 2 K(h) / (pi h^2)
/// with gamma_h the disc set covariance (lens area).
inline double diggle_mse(double h, double lambda, double area,
                         const PairTable& pairs) {
  const double disc = kPi * h * h;
  double conv_term = 0.0;
  double k_term = 0.0;
  for (std::size_t k = 0; k < pairs.d.size(); ++k) {
    const double d = pairs.d[k];
    if (d <= h) k_term += 2.0 * pairs.e[k];
    if (d >= 2.0 * h) continue;
    const double half = d / 2.0;
    const double lens =
        2.0 * h * h * std::acos(half / h) - half * std::sqrt(4.0 * h * h - d * d);
    conv_term += 2.0 * pairs.e[k] * lens;
  }
  return lambda / disc + conv_term / (disc * disc * area) -
         2.0 * k_term / (disc * area);
}

/// Leave-one-out point-process likelihood cross-validation score.
inline double ppl_score(double b, const PointPattern& pattern) {
  const std::size_t n = pattern.size();
  const double norm = 1.0 / (2.0 * kPi * b * b);
  std::vector<double> mass(n);
  for (std::size_t i = 0; i < n; ++i)
    mass[i] = gaussian_window_mass(pattern.window, pattern.points[i].x,
                                   pattern.points[i].y, b);
  std::vector<double> loo(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = pattern.points[j].x - pattern.points[i].x;
      const double dy = pattern.points[j].y - pattern.points[i].y;
      const double k = norm * std::exp(-0.5 * (dx * dx + dy * dy) / (b * b));
      loo[i] += k / mass[j];
      loo[j] += k / mass[i];
    }
  }
  double score = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (loo[i] <= 0.0) return -std::numeric_limits<double>::infinity();
    score += std::log(loo[i]);
  }
  // each corrected kernel integrates to 1 over W, so the integral term is n
  return score - static_cast<double>(n);
}

}  // namespace detail

/// Bandwidth selection: the fixed min(side)/8 default, the Berman-Diggle
/// MSE minimizer, or likelihood cross-validation, the latter two over a
/// log-spaced candidate grid.
inline double select_bandwidth(const PointPattern& pattern, BandwidthRule rule,
                               int ncandidates = 32) {
  if (rule == BandwidthRule::default_rule)
    return pattern.window.min_side() / 8.0;
  if (pattern.size() == 0)
    throw EmptyPattern("data-driven bandwidth rules need a nonempty pattern");

  const std::vector<double> grid =
      bandwidth_candidates(pattern.window, ncandidates);
  if (rule == BandwidthRule::diggle) {
    const double lambda = pattern.intensity();
    // criterion computed with disc radius h = 2b (matching second moments)
    const auto pairs =
        detail::pair_table(pattern, std::min(4.0 * grid.back(),
                                             pattern.window.min_side() * 0.99));
    double best = grid.front();
    double fbest = std::numeric_limits<double>::infinity();
    for (double b : grid) {
      const double m =
          detail::diggle_mse(2.0 * b, lambda, pattern.window.area(), pairs);
      if (m < fbest) {
        fbest = m;
        best = b;
      }
    }
    return best;
  }
  // ppl
  double best = grid.front();
  double fbest = -std::numeric_limits<double>::infinity();
  for (double b : grid) {
    const double s = detail::ppl_score(b, pattern);
    if (s > fbest) {
      fbest = s;
      best = b;
    }
  }
  return best;
}

}  // namespace spavg
