#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <variant>
#include <vector>

#include "spavg/errors.hpp"
#include "spavg/geometry.hpp"
#include "spavg/rng.hpp"
#include "spavg/summaries.hpp"

namespace spavg {

// ---------------------------------------------------------------------------
// Parametric model specifications
// ---------------------------------------------------------------------------

/// Inhomogeneous Poisson intensity presets 1-4 on [0,1]^2.
struct PoissonModel {
  int preset = 1;
};

/// Gaussian-kernel determinantal process with log-linear intensity
/// exp(beta0 + beta1 * x).
struct DppGaussModel {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double alpha = 0.05;

  double rho(double x, double /*y*/) const { return std::exp(beta0 + beta1 * x); }
  double rho_max(const Window& w) const {
    return std::exp(beta0 + beta1 * (beta1 >= 0.0 ? w.x1 : w.x0));
  }
};

struct ThomasModel {
  double kappa = 10.0;  // parents per unit area
  double mu = 10.0;     // mean children per parent
  double sigma = 0.05;  // child dispersion
};

/// Boolean disc model: Poisson germs, radii 0.1 * Beta(1, alpha_r).
struct BooleanModel {
  double rho = 100.0;
  double alpha_r = 1.0;
};

using ModelSpec = std::variant<PoissonModel, DppGaussModel, ThomasModel, BooleanModel>;

// ---------------------------------------------------------------------------
// Poisson intensities and simulation
// ---------------------------------------------------------------------------

/// Intensity value of preset models 1-4 at (x, y) in [0,1]^2.
inline double poisson_intensity(int preset, double x, double y) {
  switch (preset) {
    case 1:
      return 100.0;
    case 2:
      return 1000.0;
    case 3: {
      const double s2 = 0.05 * 0.05;
      auto bump = [&](double a, double b) {
        const double dx = x - a, dy = y - b;
        return std::exp(-(dx * dx + dy * dy) / s2) / (2.0 * kPi * s2);
      };
      return 25.0 * (bump(0.25, 0.25) + bump(0.25, 0.75) + bump(0.75, 0.25) +
                     bump(0.75, 0.75));
    }
    case 4:
      return 1000.0 * std::exp(-3.0 * x);
    default:
      throw UnknownPreset("Poisson intensity preset must be 1-4");
  }
}

/// Supremum of a preset intensity over [0,1]^2.
inline double poisson_intensity_max(int preset) {
  switch (preset) {
    case 1:
      return 100.0;
    case 2:
      return 1000.0;
    case 3:
      // maximum at a cluster center; cross terms are below 1e-40 there
      return 25.0 / (2.0 * kPi * 0.05 * 0.05) * (1.0 + 1e-9);
    case 4:
      return 1000.0;
    default:
      throw UnknownPreset("Poisson intensity preset must be 1-4");
  }
}

/// Homogeneous Poisson: count-then-place.
inline PointPattern simulate_poisson_homogeneous(double rho, const Window& w,
                                                 RngStream& rng) {
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw UnboundedIntensity("intensity must be finite and nonnegative");
  const long n = rng.poisson(rho * w.area());
  std::vector<Point> pts;
  pts.reserve(n);
  for (long i = 0; i < n; ++i)
    pts.push_back({rng.uniform(w.x0, w.x1), rng.uniform(w.y0, w.y1)});
  return PointPattern(std::move(pts), w);
}

/// Inhomogeneous Poisson by thinning a homogeneous process at rho_max.
inline PointPattern simulate_poisson(
    const std::function<double(double, double)>& intensity, double rho_max,
    const Window& w, RngStream& rng) {
  if (!(rho_max >= 0.0) || !std::isfinite(rho_max))
    throw UnboundedIntensity("intensity bound must be finite");
  PointPattern dense = simulate_poisson_homogeneous(rho_max, w, rng);
  std::vector<Point> keep;
  keep.reserve(dense.size());
  for (const auto& p : dense.points)
    if (rng.uniform() * rho_max < intensity(p.x, p.y)) keep.push_back(p);
  return PointPattern(std::move(keep), w);
}

inline PointPattern simulate_poisson(const PoissonModel& model, RngStream& rng) {
  const Window unit(0.0, 1.0, 0.0, 1.0);
  if (model.preset == 1 || model.preset == 2)
    return simulate_poisson_homogeneous(poisson_intensity_max(model.preset),
                                        unit, rng);
  const int preset = model.preset;
  return simulate_poisson(
      [preset](double x, double y) { return poisson_intensity(preset, x, y); },
      poisson_intensity_max(preset), unit, rng);
}

/// Poisson sample with a pixel field as intensity (bootstrap resampling
/// of kernel estimates).
inline PointPattern simulate_poisson(const IntensityField& field,
                                     RngStream& rng) {
  const double rho_max = field.max_value();
  if (rho_max <= 0.0) return PointPattern({}, field.window);
  return simulate_poisson(
      [&field](double x, double y) { return field.value_at(x, y); }, rho_max,
      field.window, rng);
}

// ---------------------------------------------------------------------------
// Gaussian DPP
// ---------------------------------------------------------------------------

/// Largest admissible kernel scale for a Gaussian DPP with intensity
/// bound rho_max (spectral maximum rho*pi*alpha^2 <= 1).
inline double dpp_alpha_max(double rho_max) {
  return 1.0 / std::sqrt(kPi * rho_max);
}

inline double dpp_theory_g(double alpha, double r) {
  return 1.0 - std::exp(-2.0 * r * r / (alpha * alpha));
}

inline double dpp_theory_k(double alpha, double r) {
  return kPi * r * r -
         (kPi * alpha * alpha / 2.0) *
             (1.0 - std::exp(-2.0 * r * r / (alpha * alpha)));
}

namespace detail {

/// Fourier-basis sampler for the homogeneous Gaussian DPP on a
/// rectangle: Bernoulli selection of eigenfunctions followed by
/// sequential conditional sampling of the projection process.
inline PointPattern sample_dpp_projection(double rho, double alpha,
                                          const Window& w, RngStream& rng,
                                          double tail_cap) {
  const double lambda0 = rho * kPi * alpha * alpha;
  if (lambda0 > 1.0 + 1e-12)
    throw ExistenceViolated("rho*pi*alpha^2 exceeds 1");
  if (rho <= 0.0) return PointPattern({}, w);

  const double L1 = w.width(), L2 = w.height();
  // eigenvalue lambda_k = lambda0 * exp(-pi^2 alpha^2 ((k1/L1)^2+(k2/L2)^2))
  auto axis_sum = [&](double L, long m) {
    double s = 1.0;
    for (long k = 1;; ++k) {
      const double t = kPi * alpha * static_cast<double>(k) / L;
      const double v = std::exp(-t * t);
      if (m >= 0 && k > m) break;
      s += 2.0 * v;
      if (m < 0 && v < 1e-18) break;
    }
    return s;
  };
  const double sa_full = axis_sum(L1, -1);
  const double sb_full = axis_sum(L2, -1);
  const double total = lambda0 * sa_full * sb_full;

  long m1 = 1, m2 = 1;
  for (;;) {
    const double tail =
        total - lambda0 * axis_sum(L1, m1) * axis_sum(L2, m2);
    if (tail < tail_cap) break;
    ++m1;
    ++m2;
    if (m1 > 4096)
      throw TruncationTooCoarse("eigenvalue tail cap unreachable");
  }

  // Bernoulli selection of active frequencies, fixed lattice order
  std::vector<double> w1, w2;
  for (long k1 = -m1; k1 <= m1; ++k1) {
    const double t1 = kPi * alpha * static_cast<double>(k1) / L1;
    const double a1 = std::exp(-t1 * t1);
    for (long k2 = -m2; k2 <= m2; ++k2) {
      const double t2 = kPi * alpha * static_cast<double>(k2) / L2;
      const double lam = lambda0 * a1 * std::exp(-t2 * t2);
      if (rng.uniform() < lam) {
        w1.push_back(2.0 * kPi * static_cast<double>(k1) / L1);
        w2.push_back(2.0 * kPi * static_cast<double>(k2) / L2);
      }
    }
  }
  const int m = static_cast<int>(w1.size());
  if (m == 0) return PointPattern({}, w);

  const double area = w.area();
  const double inv_sqrt_area = 1.0 / std::sqrt(area);
  auto basis_vector = [&](double x, double y, Eigen::VectorXcd& v) {
    const double rx = x - w.x0, ry = y - w.y0;
    for (int t = 0; t < m; ++t) {
      const double phase = w1[t] * rx + w2[t] * ry;
      v[t] = std::complex<double>(std::cos(phase), std::sin(phase)) *
             inv_sqrt_area;
    }
  };

  std::vector<Eigen::VectorXcd> basis;  // orthonormalized accepted directions
  basis.reserve(m);
  std::vector<Point> pts;
  pts.reserve(m);
  Eigen::VectorXcd v(m);
  std::vector<std::complex<double>> proj(m);

  for (int i = 0; i < m; ++i) {
    bool accepted = false;
    for (long trial = 0; trial < 500000; ++trial) {
      const double x = rng.uniform(w.x0, w.x1);
      const double y = rng.uniform(w.y0, w.y1);
      basis_vector(x, y, v);
      double residual = static_cast<double>(m) / area;
      for (std::size_t j = 0; j < basis.size(); ++j) {
        proj[j] = basis[j].dot(v);  // conjugate dot
        residual -= std::norm(proj[j]);
      }
      const double accept = residual * area / static_cast<double>(m);
      if (rng.uniform() < accept) {
        Eigen::VectorXcd res = v;
        for (std::size_t j = 0; j < basis.size(); ++j)
          res -= proj[j] * basis[j];
        const double nrm = res.norm();
        if (nrm < 1e-9) continue;  // numerically degenerate, re-draw
        basis.push_back(res / nrm);
        pts.push_back({x, y});
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NonConvergence("DPP sequential sampler exceeded its trial cap");
  }
  return PointPattern(std::move(pts), w);
}

}  // namespace detail

/// Simulate a Gaussian DPP.  The inhomogeneous case thins a homogeneous
/// sample at rho_max, which preserves the determinantal structure.
inline PointPattern simulate_dpp_gauss(const DppGaussModel& model,
                                       const Window& w, RngStream& rng,
                                       double tail_cap = 1e-3) {
  const double rmax = model.rho_max(w);
  if (model.alpha > dpp_alpha_max(rmax) * (1.0 + 1e-9))
    throw ExistenceViolated("alpha exceeds the existence bound for rho_max");
  PointPattern dense =
      detail::sample_dpp_projection(rmax, model.alpha, w, rng, tail_cap);
  if (model.beta1 == 0.0) return dense;
  std::vector<Point> keep;
  keep.reserve(dense.size());
  for (const auto& p : dense.points)
    if (rng.uniform() * rmax < model.rho(p.x, p.y)) keep.push_back(p);
  return PointPattern(std::move(keep), w);
}

// ---------------------------------------------------------------------------
// Thomas process
// ---------------------------------------------------------------------------

inline double thomas_theory_g(double kappa, double sigma, double r) {
  return 1.0 + std::exp(-r * r / (4.0 * sigma * sigma)) /
                   (4.0 * kPi * kappa * sigma * sigma);
}

inline double thomas_theory_k(double kappa, double sigma, double r) {
  return kPi * r * r +
         (1.0 - std::exp(-r * r / (4.0 * sigma * sigma))) / kappa;
}

/// Thomas cluster process: Poisson parents on a 5-sigma dilation,
/// Poisson(mu) Gaussian children each, clipped to the window.
inline PointPattern simulate_thomas(const ThomasModel& model, const Window& w,
                                    RngStream& rng) {
  if (!(model.kappa > 0.0) || !(model.mu >= 0.0) || !(model.sigma > 0.0))
    throw InvalidConfig("Thomas parameters must be positive");
  const Window dil = w.dilated(5.0 * model.sigma);
  const long nparents = rng.poisson(model.kappa * dil.area());
  std::vector<Point> pts;
  for (long p = 0; p < nparents; ++p) {
    const double px = rng.uniform(dil.x0, dil.x1);
    const double py = rng.uniform(dil.y0, dil.y1);
    const long nchild = rng.poisson(model.mu);
    for (long c = 0; c < nchild; ++c) {
      const double x = px + model.sigma * rng.normal();
      const double y = py + model.sigma * rng.normal();
      if (w.contains(x, y)) pts.push_back({x, y});
    }
  }
  return PointPattern(std::move(pts), w);
}

// ---------------------------------------------------------------------------
// Boolean disc model
// ---------------------------------------------------------------------------

struct BooleanTheory {
  double p;    // area fraction
  double la;   // boundary length per unit area
};

/// Closed-form area fraction and specific boundary length of the disc
/// Boolean model with radii 0.1 * Beta(1, alpha).
inline BooleanTheory boolean_theory(double rho, double alpha_r) {
  if (!(rho >= 0.0) || !(alpha_r > 0.0))
    throw InvalidConfig("invalid Boolean model parameters");
  const double er = 0.1 / (1.0 + alpha_r);
  const double er2 = 0.02 / ((1.0 + alpha_r) * (2.0 + alpha_r));
  const double p = 1.0 - std::exp(-rho * kPi * er2);
  const double la = 2.0 * kPi * rho * er * (1.0 - p);
  return {p, la};
}

inline constexpr double kBooleanMaxRadius = 0.1;

/// Boolean model sample: germs on the 0.1-dilated window, radii by
/// inverse transform of 0.1 * Beta(1, alpha).
inline GermGrainSet simulate_boolean(const BooleanModel& model, const Window& w,
                                     RngStream& rng) {
  if (!(model.rho >= 0.0) || !(model.alpha_r > 0.0))
    throw InvalidConfig("invalid Boolean model parameters");
  const Window dil = w.dilated(kBooleanMaxRadius);
  const long n = rng.poisson(model.rho * dil.area());
  std::vector<Point> germs;
  std::vector<double> radii;
  germs.reserve(n);
  radii.reserve(n);
  for (long i = 0; i < n; ++i) {
    germs.push_back({rng.uniform(dil.x0, dil.x1), rng.uniform(dil.y0, dil.y1)});
    radii.push_back(kBooleanMaxRadius *
                    (1.0 - std::pow(rng.uniform(), 1.0 / model.alpha_r)));
  }
  // inverse transform gives radius in (0, 0.1]; exclude the measure-zero 0
  for (auto& r : radii)
    if (r <= 0.0) r = kBooleanMaxRadius * 1e-12;
  return GermGrainSet(std::move(germs), std::move(radii), w);
}

}  // namespace spavg
