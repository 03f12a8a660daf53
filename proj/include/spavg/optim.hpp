#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace spavg {

/// Golden-section minimization on [lo, hi].
template <class Fn>
double golden_section_min(Fn&& f, double lo, double hi, double tol = 1e-10,
                          int max_iter = 200) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return (fc < fd) ? c : d;
}

/// Coarse grid scan followed by golden-section refinement in the
/// bracketing cell.  Robust against shallow non-unimodality.
template <class Fn>
double scan_then_golden_min(Fn&& f, double lo, double hi, int ngrid = 32,
                            double tol = 1e-10) {
  int best = 0;
  double fbest = std::numeric_limits<double>::infinity();
  std::vector<double> xs(ngrid);
  for (int i = 0; i < ngrid; ++i) {
    xs[i] = lo + (hi - lo) * i / (ngrid - 1);
    const double fi = f(xs[i]);
    if (fi < fbest) {
      fbest = fi;
      best = i;
    }
  }
  const double a = xs[std::max(0, best - 1)];
  const double b = xs[std::min(ngrid - 1, best + 1)];
  return golden_section_min(f, a, b, tol);
}

struct NelderMeadOptions {
  int max_iter = 400;
  double ftol = 1e-12;
  double xtol = 1e-10;
};

/// Minimal Nelder-Mead simplex minimizer for low-dimensional fits.
inline Eigen::VectorXd nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, double step,
    const NelderMeadOptions& opts = {}) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (int i = 1; i <= n; ++i) pts[i][i - 1] += step;
  for (int i = 0; i <= n; ++i) fv[i] = f(pts[i]);

  auto order = [&] {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return fv[a] < fv[b]; });
    std::vector<Eigen::VectorXd> p2(n + 1);
    std::vector<double> f2(n + 1);
    for (int i = 0; i <= n; ++i) {
      p2[i] = pts[idx[i]];
      f2[i] = fv[idx[i]];
    }
    pts.swap(p2);
    fv.swap(f2);
  };

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    order();
    double spread = 0.0;
    for (int i = 1; i <= n; ++i)
      spread = std::max(spread, (pts[i] - pts[0]).cwiseAbs().maxCoeff());
    if (std::abs(fv[n] - fv[0]) < opts.ftol && spread < opts.xtol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    const Eigen::VectorXd refl = centroid + (centroid - pts[n]);
    const double frefl = f(refl);
    if (frefl < fv[0]) {
      const Eigen::VectorXd expd = centroid + 2.0 * (centroid - pts[n]);
      const double fexpd = f(expd);
      if (fexpd < frefl) {
        pts[n] = expd;
        fv[n] = fexpd;
      } else {
        pts[n] = refl;
        fv[n] = frefl;
      }
    } else if (frefl < fv[n - 1]) {
      pts[n] = refl;
      fv[n] = frefl;
    } else {
      const Eigen::VectorXd contr =
          centroid + 0.5 * ((frefl < fv[n] ? refl : pts[n]) - centroid);
      const double fcontr = f(contr);
      if (fcontr < std::min(frefl, fv[n])) {
        pts[n] = contr;
        fv[n] = fcontr;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          fv[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  return pts[0];
}

}  // namespace spavg
