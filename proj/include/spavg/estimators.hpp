#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "spavg/errors.hpp"
#include "spavg/geometry.hpp"
#include "spavg/models.hpp"
#include "spavg/optim.hpp"
#include "spavg/summaries.hpp"

namespace spavg {

// ---------------------------------------------------------------------------
// Log-linear Poisson intensity fit
// ---------------------------------------------------------------------------

struct LogLinearFit {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double rho(double x, double /*y*/ = 0.0) const {
    return std::exp(beta0 + beta1 * x);
  }
  double rho_max(const Window& w) const {
    return std::exp(beta0 + beta1 * (beta1 >= 0.0 ? w.x1 : w.x0));
  }
  /// Exact integral of the fitted intensity over the window.
  double integral(const Window& w) const;
};

namespace detail {

/// Moments of exp(b*x) over [x0, x1]: returns (A, A', A'') with
/// A = integral exp(bx), A' = integral x exp(bx), A'' = integral x^2 exp(bx).
inline void exp_moments(double b, double x0, double x1, double& a, double& a1,
                        double& a2) {
  if (std::abs(b) < 1e-6) {
    auto pw = [&](int n) { return (std::pow(x1, n) - std::pow(x0, n)) / n; };
    // series in b, four terms are ample at |b| < 1e-6
    a = pw(1) + b * pw(2) + b * b * pw(3) / 2.0 + b * b * b * pw(4) / 6.0;
    a1 = pw(2) + b * pw(3) + b * b * pw(4) / 2.0 + b * b * b * pw(5) / 6.0;
    a2 = pw(3) + b * pw(4) + b * b * pw(5) / 2.0 + b * b * b * pw(6) / 6.0;
    return;
  }
  const double e1 = std::exp(b * x1), e0 = std::exp(b * x0);
  a = (e1 - e0) / b;
  a1 = (x1 * e1 - x0 * e0) / b - a / b;
  a2 = (x1 * x1 * e1 - x0 * x0 * e0) / b - 2.0 * a1 / b;
}

}  // namespace detail

inline double LogLinearFit::integral(const Window& w) const {
  double a, a1, a2;
  detail::exp_moments(beta1, w.x0, w.x1, a, a1, a2);
  return std::exp(beta0) * w.height() * a;
}

/// Poisson maximum likelihood for a log-linear intensity
/// exp(beta0 + beta1*x), by Newton iteration on the exact likelihood.
inline LogLinearFit fit_loglinear_intensity(const PointPattern& pattern,
                                            bool fit_slope = true) {
  const std::size_t n = pattern.size();
  if (n == 0) throw EmptyPattern("log-linear fit needs a nonempty pattern");
  const Window& w = pattern.window;
  if (!fit_slope) return {std::log(static_cast<double>(n) / w.area()), 0.0};

  double sx = 0.0;
  for (const auto& p : pattern.points) sx += p.x;
  const double h = w.height();

  Eigen::Vector2d beta(std::log(static_cast<double>(n) / w.area()), 0.0);
  auto loglik = [&](const Eigen::Vector2d& b) {
    double a, a1, a2;
    detail::exp_moments(b[1], w.x0, w.x1, a, a1, a2);
    return n * b[0] + b[1] * sx - std::exp(b[0]) * h * a;
  };
  for (int iter = 0; iter < 100; ++iter) {
    double a, a1, a2;
    detail::exp_moments(beta[1], w.x0, w.x1, a, a1, a2);
    const double c = std::exp(beta[0]) * h;
    Eigen::Vector2d grad(static_cast<double>(n) - c * a, sx - c * a1);
    if (grad.norm() < 1e-10) return {beta[0], beta[1]};
    Eigen::Matrix2d hess;
    hess << -c * a, -c * a1, -c * a1, -c * a2;
    Eigen::Vector2d step = hess.fullPivLu().solve(-grad);
    // damped Newton
    const double f0 = loglik(beta);
    double t = 1.0;
    for (int k = 0; k < 40; ++k, t /= 2.0) {
      const Eigen::Vector2d cand = beta + t * step;
      const double f = loglik(cand);
      if (std::isfinite(f) && f >= f0 - 1e-14 * std::abs(f0)) {
        beta = cand;
        break;
      }
    }
  }
  {
    double a, a1, a2;
    detail::exp_moments(beta[1], w.x0, w.x1, a, a1, a2);
    const double c = std::exp(beta[0]) * h;
    Eigen::Vector2d grad(static_cast<double>(n) - c * a, sx - c * a1);
    if (grad.norm() < 1e-6) return {beta[0], beta[1]};
  }
  throw NonConvergence("log-linear intensity fit did not converge");
}

// ---------------------------------------------------------------------------
// Minimum contrast
// ---------------------------------------------------------------------------

struct ContrastConfig {
  double q = 0.25;
  double rmin = 0.0;
  double rmax = 0.25;
  Eigen::VectorXd lower;  // parameter box
  Eigen::VectorXd upper;
  bool log_space = true;  // optimize positive parameters on the log scale
  int scan_grid = 32;     // 1-parameter coarse scan size

  void validate() const {
    if (!(q > 0.0) || q > 1.0) throw InvalidConfig("contrast exponent q in (0,1]");
    if (!(rmin >= 0.0) || !(rmax > rmin))
      throw InvalidConfig("contrast range must satisfy 0 <= rmin < rmax");
    if (lower.size() != upper.size() || lower.size() < 1)
      throw InvalidConfig("contrast bounds missing");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      if (!(upper[i] > lower[i])) throw InvalidConfig("empty contrast box");
  }
};

using TheoryCurve = std::function<double(const Eigen::VectorXd&, double)>;

/// Integrated q-power discrepancy between an observed summary and a
/// theoretical curve, trapezoid rule on the observed grid.
inline double contrast_value(const SummaryFunction& observed,
                             const TheoryCurve& theory,
                             const ContrastConfig& cfg,
                             const Eigen::VectorXd& params) {
  double total = 0.0;
  double prev_r = 0.0, prev_f = 0.0;
  bool have_prev = false;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double r = observed.r[k];
    if (r < cfg.rmin - 1e-12 || r > cfg.rmax + 1e-12) continue;
    const double obs = std::pow(std::max(observed.values[k], 0.0), cfg.q);
    const double th = std::pow(std::max(theory(params, r), 0.0), cfg.q);
    const double f = (obs - th) * (obs - th);
    if (have_prev) total += 0.5 * (f + prev_f) * (r - prev_r);
    prev_r = r;
    prev_f = f;
    have_prev = true;
  }
  return total;
}

struct ContrastResult {
  Eigen::VectorXd params;
  double contrast = 0.0;
  bool boundary_hit = false;
};

/// Minimum contrast fit.  One parameter: coarse scan plus golden
/// section.  Two or more: Nelder-Mead with 3 spread restarts, run on
/// the log scale for positive parameters.
inline ContrastResult min_contrast(const SummaryFunction& observed,
                                   const TheoryCurve& theory,
                                   const ContrastConfig& cfg) {
  cfg.validate();
  // integration runs over grid points inside [rmin, rmax]; the grid only
  // needs to reach rmax (it may start above rmin, e.g. rmin = 0)
  if (observed.r.empty() || observed.r.back() < cfg.rmax - 1e-9 ||
      observed.r.front() > cfg.rmax - 1e-9)
    throw InvalidConfig("observed summary does not cover the contrast range");
  const int np = static_cast<int>(cfg.lower.size());

  auto to_internal = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd z = p;
    if (cfg.log_space)
      for (int i = 0; i < np; ++i) z[i] = std::log(p[i]);
    return z;
  };
  auto from_internal = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd p = z;
    if (cfg.log_space)
      for (int i = 0; i < np; ++i) p[i] = std::exp(z[i]);
    for (int i = 0; i < np; ++i)
      p[i] = std::clamp(p[i], cfg.lower[i], cfg.upper[i]);
    return p;
  };
  auto objective = [&](const Eigen::VectorXd& z) {
    return contrast_value(observed, theory, cfg, from_internal(z));
  };

  ContrastResult result;
  if (np == 1) {
    const double lo = cfg.log_space ? std::log(cfg.lower[0]) : cfg.lower[0];
    const double hi = cfg.log_space ? std::log(cfg.upper[0]) : cfg.upper[0];
    const double zbest = scan_then_golden_min(
        [&](double z) {
          Eigen::VectorXd v(1);
          v[0] = z;
          return objective(v);
        },
        lo, hi, cfg.scan_grid, 1e-12 * (hi - lo) + 1e-14);
    Eigen::VectorXd z(1);
    z[0] = zbest;
    result.params = from_internal(z);
  } else {
    const Eigen::VectorXd zlo = to_internal(cfg.lower);
    const Eigen::VectorXd zhi = to_internal(cfg.upper);
    double fbest = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best;
    for (int s = 0; s < 3; ++s) {
      const double frac = 0.25 + 0.25 * s;
      Eigen::VectorXd z0 = zlo + frac * (zhi - zlo);
      const double step = 0.15 * (zhi - zlo).maxCoeff();
      const Eigen::VectorXd z = nelder_mead(objective, z0, step);
      const double f = objective(z);
      if (f < fbest) {
        fbest = f;
        best = z;
      }
    }
    result.params = from_internal(best);
  }
  result.contrast = contrast_value(observed, theory, cfg, result.params);
  for (int i = 0; i < np; ++i) {
    const double span = cfg.upper[i] - cfg.lower[i];
    if (result.params[i] - cfg.lower[i] < 1e-6 * span ||
        cfg.upper[i] - result.params[i] < 1e-6 * span)
      result.boundary_hit = true;
  }
  return result;
}

/// Recover the Thomas offspring mean from the intensity identity
/// rho = kappa * mu.
inline double fit_thomas_mu(const PointPattern& pattern, double kappa_hat) {
  if (!(kappa_hat > 0.0)) throw InvalidConfig("kappa must be positive");
  return static_cast<double>(pattern.size()) /
         (pattern.window.area() * kappa_hat);
}

// ---------------------------------------------------------------------------
// Palm likelihood
// ---------------------------------------------------------------------------

enum class ClusterFamily { thomas, dpp_gauss };

/// Pair data entering the Palm likelihood: unordered pair distances up
/// to R with their log intensity weights.
struct PalmData {
  std::vector<double> d;     // unordered pair distances <= R
  std::vector<double> logw;  // per-pair log(rho) or log sqrt(rho_i rho_j)
  std::size_t n = 0;
  double rho_bar = 0.0;      // intensity used in the integral term
  double R = 0.0;
};

inline PalmData palm_data(
    const PointPattern& pattern, double R,
    const std::optional<std::vector<double>>& point_intensity = std::nullopt) {
  PalmData out;
  out.n = pattern.size();
  out.R = R;
  if (point_intensity) {
    if (point_intensity->size() != pattern.size())
      throw DimensionMismatch("per-point intensities do not match the pattern");
    double s = 0.0;
    for (double v : *point_intensity) s += v;
    out.rho_bar = pattern.size() ? s / pattern.size() : 0.0;
  } else {
    out.rho_bar = pattern.intensity();
  }
  const double r2 = R * R;
  for (std::size_t i = 0; i < pattern.size(); ++i)
    for (std::size_t j = i + 1; j < pattern.size(); ++j) {
      const double dx = pattern.points[j].x - pattern.points[i].x;
      const double dy = pattern.points[j].y - pattern.points[i].y;
      const double dd = dx * dx + dy * dy;
      if (dd > r2) continue;
      out.d.push_back(std::sqrt(dd));
      if (point_intensity)
        out.logw.push_back(0.5 * std::log((*point_intensity)[i] *
                                          (*point_intensity)[j]));
      else
        out.logw.push_back(std::log(out.rho_bar));
    }
  return out;
}

/// Palm log-likelihood for a Thomas process at (kappa, sigma^2); the sum
/// runs over ordered pairs (each unordered pair counts twice).
inline double palm_objective_thomas(const PalmData& data, double kappa,
                                    double sigma2) {
  const double c = 1.0 / (4.0 * kPi * kappa * sigma2);
  double s = 0.0;
  for (std::size_t k = 0; k < data.d.size(); ++k) {
    const double g = 1.0 + c * std::exp(-data.d[k] * data.d[k] / (4.0 * sigma2));
    s += 2.0 * (data.logw[k] + std::log(g));
  }
  const double integral =
      kPi * data.R * data.R +
      (1.0 - std::exp(-data.R * data.R / (4.0 * sigma2))) / kappa;
  return s - static_cast<double>(data.n) * data.rho_bar * integral;
}

/// Palm log-likelihood for the Gaussian DPP at scale alpha.
inline double palm_objective_dpp(const PalmData& data, double alpha) {
  const double a2 = alpha * alpha;
  double s = 0.0;
  for (std::size_t k = 0; k < data.d.size(); ++k) {
    const double g = 1.0 - std::exp(-2.0 * data.d[k] * data.d[k] / a2);
    if (g <= 0.0) return -std::numeric_limits<double>::infinity();
    s += 2.0 * (data.logw[k] + std::log(g));
  }
  const double integral =
      kPi * data.R * data.R -
      (kPi * a2 / 2.0) * (1.0 - std::exp(-2.0 * data.R * data.R / a2));
  return s - static_cast<double>(data.n) * data.rho_bar * integral;
}

struct PalmConfig {
  double R = 0.0;  // 0 -> quarter of the shorter window side
  Eigen::VectorXd lower, upper;
  int scan_grid = 32;
};

/// Maximum Palm likelihood fit.  Thomas: (kappa, sigma^2) by
/// Nelder-Mead on the log scale; DPP: alpha by scan plus golden section.
inline Eigen::VectorXd fit_palm(
    const PointPattern& pattern, ClusterFamily family, PalmConfig cfg,
    const std::optional<std::vector<double>>& point_intensity = std::nullopt) {
  if (cfg.R <= 0.0) cfg.R = pattern.window.min_side() / 4.0;
  const PalmData data = palm_data(pattern, cfg.R, point_intensity);
  if (data.d.empty()) throw NoPairs("no pair within the Palm cutoff R");

  if (family == ClusterFamily::dpp_gauss) {
    if (cfg.lower.size() != 1 || cfg.upper.size() != 1)
      throw InvalidConfig("DPP Palm fit needs scalar bounds for alpha");
    const double lo = std::log(cfg.lower[0]), hi = std::log(cfg.upper[0]);
    const double z = scan_then_golden_min(
        [&](double t) { return -palm_objective_dpp(data, std::exp(t)); }, lo,
        hi, cfg.scan_grid, 1e-12 * (hi - lo) + 1e-14);
    Eigen::VectorXd out(1);
    out[0] = std::clamp(std::exp(z), cfg.lower[0], cfg.upper[0]);
    return out;
  }

  if (cfg.lower.size() != 2 || cfg.upper.size() != 2)
    throw InvalidConfig("Thomas Palm fit needs bounds for (kappa, sigma^2)");
  auto objective = [&](const Eigen::VectorXd& z) {
    const double kappa = std::clamp(std::exp(z[0]), cfg.lower[0], cfg.upper[0]);
    const double s2 = std::clamp(std::exp(z[1]), cfg.lower[1], cfg.upper[1]);
    return -palm_objective_thomas(data, kappa, s2);
  };
  Eigen::Vector2d zlo(std::log(cfg.lower[0]), std::log(cfg.lower[1]));
  Eigen::Vector2d zhi(std::log(cfg.upper[0]), std::log(cfg.upper[1]));
  // coarse log-grid scan for a global start, then one local refinement
  const int scan = std::max(4, cfg.scan_grid / 4);
  double fbest = std::numeric_limits<double>::infinity();
  Eigen::VectorXd z0(2);
  for (int i = 0; i < scan; ++i)
    for (int j = 0; j < scan; ++j) {
      Eigen::VectorXd z(2);
      z[0] = zlo[0] + (zhi[0] - zlo[0]) * (i + 0.5) / scan;
      z[1] = zlo[1] + (zhi[1] - zlo[1]) * (j + 0.5) / scan;
      const double f = objective(z);
      if (f < fbest) {
        fbest = f;
        z0 = z;
      }
    }
  if (!std::isfinite(fbest))
    throw DegenerateLikelihood("Palm objective is flat or undefined");
  Eigen::VectorXd best =
      nelder_mead(objective, z0, 0.6 * (zhi - zlo).maxCoeff() / scan);
  fbest = objective(best);
  if (!std::isfinite(fbest))
    throw DegenerateLikelihood("Palm objective is flat or undefined");
  Eigen::VectorXd out(2);
  out[0] = std::clamp(std::exp(best[0]), cfg.lower[0], cfg.upper[0]);
  out[1] = std::clamp(std::exp(best[1]), cfg.lower[1], cfg.upper[1]);
  return out;
}

// ---------------------------------------------------------------------------
// Boolean model measurement and fits
// ---------------------------------------------------------------------------

struct SetMeasurements {
  double p_hat = 0.0;       // area fraction in [0,1]
  double la_hat = 0.0;      // exposed boundary length per unit area
  long tangent_count = 0;   // exposed lower tangent points in W
};

namespace detail {

/// Subset of [0, 2pi) as disjoint sorted intervals; supports removing
/// (possibly wrapping) arcs.
class AngleSet {
 public:
  AngleSet() { ivals_.push_back({0.0, 2.0 * kPi}); }

  void subtract(double a, double b) {
    // interpret [a, b] with arbitrary reals, length capped at full circle
    if (b - a >= 2.0 * kPi - 1e-15) {
      ivals_.clear();
      return;
    }
    a = wrap(a);
    b = wrap(b);
    if (a <= b) {
      subtract_plain(a, b);
    } else {
      subtract_plain(a, 2.0 * kPi);
      subtract_plain(0.0, b);
    }
  }

  double measure() const {
    double s = 0.0;
    for (const auto& iv : ivals_) s += iv.second - iv.first;
    return s;
  }

  bool empty() const { return ivals_.empty(); }

 private:
  static double wrap(double t) {
    t = std::fmod(t, 2.0 * kPi);
    return t < 0.0 ? t + 2.0 * kPi : t;
  }

  void subtract_plain(double a, double b) {
    std::vector<std::pair<double, double>> out;
    out.reserve(ivals_.size() + 1);
    for (const auto& iv : ivals_) {
      if (iv.second <= a || iv.first >= b) {
        out.push_back(iv);
        continue;
      }
      if (iv.first < a) out.push_back({iv.first, a});
      if (iv.second > b) out.push_back({b, iv.second});
    }
    ivals_.swap(out);
  }

  std::vector<std::pair<double, double>> ivals_;
};

/// Remove from `set` the directions whose boundary point of a circle
/// (center c, radius r) falls outside the window.
inline void clip_circle_to_window(AngleSet& set, const Point& c, double r,
                                  const Window& w) {
  auto clamp1 = [](double t) { return std::clamp(t, -1.0, 1.0); };
  // x >= x0  <=>  cos(theta) >= t ; complement is (A, 2pi - A)
  {
    const double t = (w.x0 - c.x) / r;
    if (t > 1.0) {
      set.subtract(0.0, 2.0 * kPi);
    } else if (t >= -1.0) {
      const double A = std::acos(clamp1(t));
      set.subtract(A, 2.0 * kPi - A);
    }
  }
  // x <= x1  <=>  cos(theta) <= t ; complement is (-A, A)
  {
    const double t = (w.x1 - c.x) / r;
    if (t < -1.0) {
      set.subtract(0.0, 2.0 * kPi);
    } else if (t <= 1.0) {
      const double A = std::acos(clamp1(t));
      set.subtract(-A, A);
    }
  }
  // y >= y0  <=>  sin(theta) >= t ; complement is (pi - B, 2pi + B)
  {
    const double t = (w.y0 - c.y) / r;
    if (t > 1.0) {
      set.subtract(0.0, 2.0 * kPi);
    } else if (t >= -1.0) {
      const double B = std::asin(clamp1(t));
      set.subtract(kPi - B, 2.0 * kPi + B);
    }
  }
  // y <= y1  <=>  sin(theta) <= t ; complement is (B, pi - B)
  {
    const double t = (w.y1 - c.y) / r;
    if (t < -1.0) {
      set.subtract(0.0, 2.0 * kPi);
    } else if (t <= 1.0) {
      const double B = std::asin(clamp1(t));
      set.subtract(B, kPi - B);
    }
  }
}

}  // namespace detail

/// Area fraction (rasterized), exposed boundary length (exact circular
/// arcs) and lower tangent point count of a disc union inside a window.
inline SetMeasurements measure_set(const GermGrainSet& set, const Window& w,
                                   int raster_res = 1024) {
  SetMeasurements out;
  const std::size_t n = set.size();

  // --- area fraction by rasterization at pixel centers
  const int nx = raster_res, ny = raster_res;
  const double dx = w.width() / nx, dy = w.height() / ny;
  std::vector<std::uint8_t> covered(static_cast<std::size_t>(nx) * ny, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& c = set.germs[i];
    const double r = set.radii[i];
    const int ix_lo = std::max(0, static_cast<int>((c.x - r - w.x0) / dx));
    const int ix_hi = std::min(nx - 1, static_cast<int>((c.x + r - w.x0) / dx));
    const int iy_lo = std::max(0, static_cast<int>((c.y - r - w.y0) / dy));
    const int iy_hi = std::min(ny - 1, static_cast<int>((c.y + r - w.y0) / dy));
    const double r2 = r * r;
    for (int iy = iy_lo; iy <= iy_hi; ++iy) {
      const double py = w.y0 + (iy + 0.5) * dy;
      const double ey = (py - c.y) * (py - c.y);
      if (ey > r2) continue;
      const double half = std::sqrt(r2 - ey);
      int jx_lo = static_cast<int>(std::ceil((c.x - half - w.x0) / dx - 0.5));
      int jx_hi = static_cast<int>(std::floor((c.x + half - w.x0) / dx - 0.5));
      jx_lo = std::max(jx_lo, ix_lo);
      jx_hi = std::min(jx_hi, ix_hi);
      if (jx_lo > jx_hi) continue;
      std::uint8_t* row = &covered[static_cast<std::size_t>(iy) * nx];
      for (int ix = jx_lo; ix <= jx_hi; ++ix) row[ix] = 1;
    }
  }
  std::size_t count = 0;
  for (auto b : covered) count += b;
  out.p_hat = static_cast<double>(count) /
              (static_cast<double>(nx) * static_cast<double>(ny));

  // --- exposed perimeter by exact circle-circle arc subtraction
  double perimeter = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& ci = set.germs[i];
    const double ri = set.radii[i];
    // skip circles that cannot touch the window
    if (ci.x + ri < w.x0 || ci.x - ri > w.x1 || ci.y + ri < w.y0 ||
        ci.y - ri > w.y1)
      continue;
    detail::AngleSet exposed;
    detail::clip_circle_to_window(exposed, ci, ri, w);
    bool swallowed = false;
    for (std::size_t j = 0; j < n && !exposed.empty(); ++j) {
      if (j == i) continue;
      const Point& cj = set.germs[j];
      const double rj = set.radii[j];
      const double ddx = cj.x - ci.x, ddy = cj.y - ci.y;
      const double d2 = ddx * ddx + ddy * ddy;
      if (d2 >= (ri + rj) * (ri + rj)) continue;
      const double d = std::sqrt(d2);
      if (d + ri <= rj) {
        swallowed = true;  // circle i entirely inside grain j
        break;
      }
      if (d + rj <= ri) continue;  // grain j entirely inside disc i
      const double cosphi =
          std::clamp((d2 + ri * ri - rj * rj) / (2.0 * d * ri), -1.0, 1.0);
      const double phi = std::acos(cosphi);
      const double theta = std::atan2(ddy, ddx);
      exposed.subtract(theta - phi, theta + phi);
    }
    if (!swallowed) perimeter += ri * exposed.measure();
  }
  out.la_hat = perimeter / w.area();

  // --- lower tangent points
  long tangents = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point t{set.germs[i].x, set.germs[i].y - set.radii[i]};
    if (!w.contains(t)) continue;
    bool hidden = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double ddx = t.x - set.germs[j].x, ddy = t.y - set.germs[j].y;
      if (ddx * ddx + ddy * ddy < set.radii[j] * set.radii[j]) {
        hidden = true;
        break;
      }
    }
    if (!hidden) ++tangents;
  }
  out.tangent_count = tangents;
  return out;
}

struct BooleanMomentFit {
  double rho1 = 0.0;
  double alpha = 0.0;
  bool alpha_clamped = false;  // alpha <= 0 from noisy measurements
};

/// Invert the (area fraction, boundary length) forward map of the disc
/// Boolean model with 0.1*Beta(1, alpha) radii.
inline BooleanMomentFit boolean_fit_area_perimeter(const SetMeasurements& m) {
  if (m.p_hat >= 1.0 - 1e-6) throw Saturated("random set fills the window");
  if (!(m.p_hat > 0.0) || !(m.la_hat > 0.0))
    throw InvalidConfig("area-perimeter fit needs 0 < p < 1 and positive L_A");
  const double c1 = m.la_hat / (2.0 * kPi * (1.0 - m.p_hat));  // rho E[R]
  const double c2 = -std::log(1.0 - m.p_hat);                  // rho pi E[R^2]
  BooleanMomentFit fit;
  fit.alpha = 0.2 * kPi * c1 / c2 - 2.0;
  if (fit.alpha <= 0.0) {
    fit.alpha = 1e-3;
    fit.alpha_clamped = true;
  }
  fit.rho1 = c1 * (1.0 + fit.alpha) / 0.1;
  return fit;
}

/// Tangent-point intensity estimator: exposed lower tangent points of a
/// Boolean model have intensity rho * (1 - p).
inline double boolean_fit_tangent(const SetMeasurements& m, const Window& w) {
  if (m.p_hat >= 1.0 - 1e-6) throw Saturated("random set fills the window");
  return static_cast<double>(m.tangent_count) / ((1.0 - m.p_hat) * w.area());
}

}  // namespace spavg
