#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "spavg/averaging.hpp"
#include "spavg/bootstrap.hpp"
#include "spavg/errors.hpp"
#include "spavg/estimators.hpp"
#include "spavg/geometry.hpp"
#include "spavg/io.hpp"
#include "spavg/models.hpp"
#include "spavg/parallel.hpp"
#include "spavg/rng.hpp"
#include "spavg/summaries.hpp"

namespace spavg {

// ---------------------------------------------------------------------------
// Averaging modes
// ---------------------------------------------------------------------------

/// av: per-parameter weights from the (block-masked, for multi-parameter
/// banks) MSE matrix; av_plus: full-matrix foreign-estimator weights;
/// convex: per-parameter simplex weights.
enum class AveragingMode { av, av_plus, convex };

inline std::string mode_name(AveragingMode m) {
  switch (m) {
    case AveragingMode::av:
      return "av";
    case AveragingMode::av_plus:
      return "av+";
    default:
      return "convex";
  }
}

inline AveragingMode parse_mode(const std::string& s) {
  if (s == "av") return AveragingMode::av;
  if (s == "av+") return AveragingMode::av_plus;
  if (s == "convex") return AveragingMode::convex;
  throw InvalidConfig("unknown averaging mode '" + s + "'");
}

namespace detail {

/// Simplex-constrained weights per group, zero outside each group.
inline WeightSolution convex_group_weights(const MseMatrix& sigma,
                                           const GroupStructure& groups) {
  const int m = groups.total();
  const int np = groups.count();
  WeightSolution sol;
  sol.weights = Eigen::MatrixXd::Zero(m, np);
  sol.estimated_mse = Eigen::VectorXd::Zero(np);
  sol.mode = WeightMode::convex;
  int row = 0;
  for (int p = 0; p < np; ++p) {
    const int j = groups.sizes[p];
    Eigen::MatrixXd block = sigma.entries.block(row, row, j, j);
    std::vector<std::string> lab(sigma.labels.begin() + row,
                                 sigma.labels.begin() + row + j);
    const WeightSolution s = convex_weights(MseMatrix(lab, block));
    sol.weights.block(row, p, j, 1) = s.weights;
    sol.estimated_mse[p] = s.estimated_mse[0];
    sol.mse_clamped = sol.mse_clamped || s.mse_clamped;
    row += j;
  }
  return sol;
}

/// Weight solution for one mode given the bank's group structure.
inline WeightSolution solve_mode(const MseMatrix& sigma,
                                 const GroupStructure& groups,
                                 AveragingMode mode, bool foreign_av) {
  if (mode == AveragingMode::convex) return convex_group_weights(sigma, groups);
  if (groups.count() == 1) return oracle_weights(sigma);
  if (mode == AveragingMode::av_plus)
    return group_weights(sigma, groups, GroupMode::full);
  return group_weights(sigma, groups,
                       foreign_av ? GroupMode::full : GroupMode::masked);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scalar-parameter pipelines (DPP, Thomas, Boolean)
// ---------------------------------------------------------------------------

struct ModeResult {
  WeightSolution solution;
  Eigen::VectorXd combined;       // length P
  Eigen::VectorXd estimated_mse;  // length P, plug-in estimate
};

struct ScalarPipelineResult {
  std::vector<std::string> labels;          // bank order, fixed
  std::vector<std::string> parameter_names; // length P
  Eigen::VectorXd initial;                  // bank estimates on the data
  GroupStructure groups;
  MseMatrix sigma;
  std::map<AveragingMode, ModeResult> modes;
};

struct PipelineOptions {
  BootstrapConfig bootstrap;
  std::vector<AveragingMode> modes = {AveragingMode::av};
};

// ----- Gaussian DPP --------------------------------------------------------

struct DppPipelineOptions : PipelineOptions {
  // fit the log-linear intensity with a slope term; on by default so the
  // same protocol covers homogeneous and inhomogeneous data
  bool fit_slope = true;
};

namespace detail {

struct DppBankContext {
  bool fit_slope = false;
};

/// One bank evaluation: (alpha_K, alpha_g, alpha_palm) plus the
/// intensity fit used to anchor the bootstrap simulation.
inline Eigen::VectorXd dpp_bank(const PointPattern& p, bool fit_slope,
                                LogLinearFit* fit_out = nullptr) {
  if (p.size() < 2) throw TooFewPoints("DPP bank needs at least 2 points");
  const LogLinearFit fit = fit_loglinear_intensity(p, fit_slope);
  if (fit_out) *fit_out = fit;
  const double rho_max = fit.rho_max(p.window);
  const double alpha_hi = dpp_alpha_max(rho_max);
  const double alpha_lo = alpha_hi / 50.0;
  std::optional<std::vector<double>> weights;
  std::optional<std::vector<double>> palm_weights;
  if (fit_slope) {
    // K and pcf use the leave-one-out fitted intensity at the data
    // points: the fitted intensity integrates to n, so each point's own
    // contribution is removed before it weights its pairs
    const double loo =
        (static_cast<double>(p.size()) - 1.0) / static_cast<double>(p.size());
    std::vector<double> lam, lam_palm;
    lam.reserve(p.size());
    lam_palm.reserve(p.size());
    for (const auto& q : p.points) {
      lam.push_back(loo * fit.rho(q.x));
      lam_palm.push_back(fit.rho(q.x));
    }
    weights = std::move(lam);
    palm_weights = std::move(lam_palm);
  }

  const double rmax = p.window.min_side() / 4.0;
  Eigen::VectorXd out(3);
  {
    const std::vector<double> rgrid = linspace(rmax / 128.0, rmax, 128);
    const SummaryFunction khat = ripley_k(p, rgrid, weights);
    ContrastConfig cfg;
    cfg.q = 0.25;
    cfg.rmin = 0.0;
    cfg.rmax = rmax;
    cfg.lower = Eigen::VectorXd::Constant(1, alpha_lo);
    cfg.upper = Eigen::VectorXd::Constant(1, alpha_hi);
    const TheoryCurve theory = [](const Eigen::VectorXd& th, double r) {
      return dpp_theory_k(th[0], r);
    };
    out[0] = min_contrast(khat, theory, cfg).params[0];
  }
  {
    const std::vector<double> rgrid = linspace(0.01, rmax, 128);
    const SummaryFunction ghat = pcf_estimate(p, rgrid, std::nullopt, weights);
    ContrastConfig cfg;
    cfg.q = 0.5;
    cfg.rmin = 0.01;
    cfg.rmax = rmax;
    cfg.lower = Eigen::VectorXd::Constant(1, alpha_lo);
    cfg.upper = Eigen::VectorXd::Constant(1, alpha_hi);
    const TheoryCurve theory = [](const Eigen::VectorXd& th, double r) {
      return dpp_theory_g(th[0], r);
    };
    out[1] = min_contrast(ghat, theory, cfg).params[0];
  }
  {
    PalmConfig cfg;
    cfg.lower = Eigen::VectorXd::Constant(1, alpha_lo);
    cfg.upper = Eigen::VectorXd::Constant(1, alpha_hi);
    out[2] = fit_palm(p, ClusterFamily::dpp_gauss, cfg, palm_weights)[0];
  }
  return out;
}

}  // namespace detail

/// Full DPP averaging pipeline: three alpha estimators, Palm-anchored
/// parametric bootstrap, requested averaging modes.
inline ScalarPipelineResult average_dpp_pipeline(const PointPattern& p,
                                                 const DppPipelineOptions& opt) {
  ScalarPipelineResult res;
  res.labels = {"k", "g", "palm"};
  res.parameter_names = {"alpha"};
  res.groups = GroupStructure({3});

  LogLinearFit fit;
  res.initial = detail::dpp_bank(p, opt.fit_slope, &fit);

  // anchor at the Palm estimate, clipped to the existence bound
  const double rho_max = fit.rho_max(p.window);
  const double alpha0 =
      std::min(res.initial[2], dpp_alpha_max(rho_max) * (1.0 - 1e-9));
  const DppGaussModel anchor_model{fit.beta0, fit.beta1, alpha0};
  const Window w = p.window;
  const bool slope = opt.fit_slope;

  Eigen::VectorXd anchor = Eigen::VectorXd::Constant(3, res.initial[2]);
  res.sigma = bootstrap_mse_matrix<PointPattern>(
      [anchor_model, w](RngStream& rng) {
        return simulate_dpp_gauss(anchor_model, w, rng);
      },
      anchor,
      [slope](const PointPattern& sample, RngStream&) {
        return detail::dpp_bank(sample, slope);
      },
      res.labels, opt.bootstrap);

  for (AveragingMode mode : opt.modes) {
    ModeResult mr;
    mr.solution = detail::solve_mode(res.sigma, res.groups, mode, false);
    mr.combined = combine(res.initial, mr.solution);
    mr.estimated_mse = mr.solution.estimated_mse;
    res.modes.emplace(mode, std::move(mr));
  }
  return res;
}

// ----- Thomas --------------------------------------------------------------

struct ThomasPipelineOptions : PipelineOptions {};

namespace detail {

struct ThomasFit {
  double kappa = 0.0, sigma2 = 0.0, mu = 0.0;
};

/// Bank of 9 estimates ordered by parameter then method:
/// (kappa_K, kappa_g, kappa_palm, sigma2_K, sigma2_g, sigma2_palm,
///  mu_K, mu_g, mu_palm).  `anchor_out` receives the g-contrast fit.
inline Eigen::VectorXd thomas_bank(const PointPattern& p,
                                   ThomasFit* anchor_out = nullptr) {
  if (p.size() < 2) throw TooFewPoints("Thomas bank needs at least 2 points");
  const double rmax = p.window.min_side() / 4.0;
  const Eigen::Vector2d lower(0.5, 0.002);   // (kappa, sigma)
  const Eigen::Vector2d upper(2000.0, 0.5);

  ThomasFit fits[3];
  {
    const std::vector<double> rgrid = linspace(rmax / 128.0, rmax, 128);
    const SummaryFunction khat = ripley_k(p, rgrid);
    ContrastConfig cfg;
    cfg.q = 0.25;
    cfg.rmin = 0.0;
    cfg.rmax = rmax;
    cfg.lower = lower;
    cfg.upper = upper;
    const TheoryCurve theory = [](const Eigen::VectorXd& th, double r) {
      return thomas_theory_k(th[0], th[1], r);
    };
    const ContrastResult r = min_contrast(khat, theory, cfg);
    fits[0] = {r.params[0], r.params[1] * r.params[1],
               fit_thomas_mu(p, r.params[0])};
  }
  {
    const std::vector<double> rgrid = linspace(0.01, rmax, 128);
    const SummaryFunction ghat = pcf_estimate(p, rgrid);
    ContrastConfig cfg;
    cfg.q = 0.5;
    cfg.rmin = 0.01;
    cfg.rmax = rmax;
    cfg.lower = lower;
    cfg.upper = upper;
    const TheoryCurve theory = [](const Eigen::VectorXd& th, double r) {
      return thomas_theory_g(th[0], th[1], r);
    };
    const ContrastResult r = min_contrast(ghat, theory, cfg);
    fits[1] = {r.params[0], r.params[1] * r.params[1],
               fit_thomas_mu(p, r.params[0])};
  }
  {
    PalmConfig cfg;
    // cluster correlations are negligible past a few dispersion scales;
    // capping R keeps the pair set (and the fit cost) bounded on large
    // windows without losing information
    cfg.R = std::min(p.window.min_side() / 4.0, 0.25);
    cfg.lower = Eigen::Vector2d(lower[0], lower[1] * lower[1]);
    cfg.upper = Eigen::Vector2d(upper[0], upper[1] * upper[1]);
    const Eigen::VectorXd r = fit_palm(p, ClusterFamily::thomas, cfg);
    fits[2] = {r[0], r[1], fit_thomas_mu(p, r[0])};
  }
  if (anchor_out) *anchor_out = fits[1];

  Eigen::VectorXd out(9);
  for (int m = 0; m < 3; ++m) {
    out[m] = fits[m].kappa;
    out[3 + m] = fits[m].sigma2;
    out[6 + m] = fits[m].mu;
  }
  return out;
}

}  // namespace detail

/// Full Thomas averaging pipeline: 3 methods x 3 parameters,
/// g-contrast-anchored bootstrap, masked (av) or full (av+) weights.
inline ScalarPipelineResult average_thomas_pipeline(
    const PointPattern& p, const ThomasPipelineOptions& opt) {
  ScalarPipelineResult res;
  res.labels = {"kappa:k",  "kappa:g",  "kappa:palm",
                "sigma2:k", "sigma2:g", "sigma2:palm",
                "mu:k",     "mu:g",     "mu:palm"};
  res.parameter_names = {"kappa", "sigma2", "mu"};
  res.groups = GroupStructure({3, 3, 3});

  detail::ThomasFit anchor_fit;
  res.initial = detail::thomas_bank(p, &anchor_fit);

  const ThomasModel anchor_model{anchor_fit.kappa, anchor_fit.mu,
                                 std::sqrt(anchor_fit.sigma2)};
  const Window w = p.window;
  Eigen::VectorXd anchor(9);
  for (int m = 0; m < 3; ++m) {
    anchor[m] = anchor_fit.kappa;
    anchor[3 + m] = anchor_fit.sigma2;
    anchor[6 + m] = anchor_fit.mu;
  }

  res.sigma = bootstrap_mse_matrix<PointPattern>(
      [anchor_model, w](RngStream& rng) {
        return simulate_thomas(anchor_model, w, rng);
      },
      anchor,
      [](const PointPattern& sample, RngStream&) {
        return detail::thomas_bank(sample);
      },
      res.labels, opt.bootstrap);

  for (AveragingMode mode : opt.modes) {
    ModeResult mr;
    mr.solution = detail::solve_mode(res.sigma, res.groups, mode, false);
    mr.combined = combine(res.initial, mr.solution);
    mr.estimated_mse = mr.solution.estimated_mse;
    res.modes.emplace(mode, std::move(mr));
  }
  return res;
}

// ----- Boolean -------------------------------------------------------------

struct BooleanPipelineOptions : PipelineOptions {
  int raster_res = 1024;
};

namespace detail {

/// Bank order: (rho1, rho2, alpha); groups (J=2 for rho, K=1 for alpha).
inline Eigen::VectorXd boolean_bank(const GermGrainSet& set,
                                    int raster_res) {
  const SetMeasurements m = measure_set(set, set.window, raster_res);
  const BooleanMomentFit moment = boolean_fit_area_perimeter(m);
  Eigen::VectorXd out(3);
  out[0] = moment.rho1;
  out[1] = boolean_fit_tangent(m, set.window);
  out[2] = moment.alpha;
  return out;
}

}  // namespace detail

/// Full Boolean averaging pipeline.  The rho group holds two estimators
/// and the alpha group one, so av combines rho with foreign-alpha
/// weights and produces alpha_av = alpha_hat + mu (rho1 - rho2).
inline ScalarPipelineResult average_boolean_pipeline(
    const GermGrainSet& set, const BooleanPipelineOptions& opt) {
  ScalarPipelineResult res;
  res.labels = {"rho1", "rho2", "alpha"};
  res.parameter_names = {"rho", "alpha"};
  res.groups = GroupStructure({2, 1});

  res.initial = detail::boolean_bank(set, opt.raster_res);

  const BooleanModel anchor_model{0.5 * (res.initial[0] + res.initial[1]),
                                  res.initial[2]};
  const Window w = set.window;
  Eigen::VectorXd anchor(3);
  anchor << anchor_model.rho, anchor_model.rho, anchor_model.alpha_r;
  const int raster = opt.raster_res;

  res.sigma = bootstrap_mse_matrix<GermGrainSet>(
      [anchor_model, w](RngStream& rng) {
        return simulate_boolean(anchor_model, w, rng);
      },
      anchor,
      [raster](const GermGrainSet& sample, RngStream&) {
        return detail::boolean_bank(sample, raster);
      },
      res.labels, opt.bootstrap);

  for (AveragingMode mode : opt.modes) {
    ModeResult mr;
    // the Boolean study uses foreign estimators by construction: av is
    // the full-matrix group solution
    mr.solution = detail::solve_mode(res.sigma, res.groups, mode, true);
    mr.combined = combine(res.initial, mr.solution);
    mr.estimated_mse = mr.solution.estimated_mse;
    res.modes.emplace(mode, std::move(mr));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Poisson intensity pipeline (function-valued, MISE matrix)
// ---------------------------------------------------------------------------

struct PoissonPipelineOptions : PipelineOptions {
  int nx = 128, ny = 128;
};

struct PoissonPipelineResult {
  std::vector<std::string> labels;
  std::vector<IntensityField> initial_fields;
  MseMatrix sigma;  // MISE matrix
  std::map<AveragingMode, WeightSolution> solutions;
  std::map<AveragingMode, IntensityField> combined;  // clamped at 0
};

namespace detail {

inline std::vector<IntensityField> poisson_field_bank(const PointPattern& p,
                                                      int nx, int ny) {
  std::vector<IntensityField> out;
  out.reserve(3);
  for (BandwidthRule rule : {BandwidthRule::default_rule, BandwidthRule::diggle,
                             BandwidthRule::ppl}) {
    const double b = select_bandwidth(p, rule);
    out.push_back(kernel_intensity(p, nx, ny, b));
  }
  return out;
}

}  // namespace detail

/// Kernel-intensity averaging: three bandwidth rules, MISE matrix from a
/// Poisson bootstrap anchored at the ppl-bandwidth field, combined field
/// projected onto nonnegative functions.
inline PoissonPipelineResult average_poisson_pipeline(
    const PointPattern& p, const PoissonPipelineOptions& opt) {
  PoissonPipelineResult res;
  res.labels = {"kernel:default", "kernel:diggle", "kernel:ppl"};
  res.initial_fields = detail::poisson_field_bank(p, opt.nx, opt.ny);

  const IntensityField& rho0 = res.initial_fields[2];  // ppl anchor
  const int nx = opt.nx, ny = opt.ny;

  res.sigma = bootstrap_mise_matrix<PointPattern>(
      [&rho0](RngStream& rng) { return simulate_poisson(rho0, rng); }, rho0,
      [nx, ny](const PointPattern& sample, RngStream&) {
        return detail::poisson_field_bank(sample, nx, ny);
      },
      res.labels, opt.bootstrap);

  for (AveragingMode mode : opt.modes) {
    const WeightSolution sol = mode == AveragingMode::convex
                                   ? convex_weights(res.sigma)
                                   : oracle_weights(res.sigma);
    IntensityField field(p.window, opt.nx, opt.ny);
    for (std::size_t px = 0; px < field.values.size(); ++px) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i)
        v += sol.weights(i, 0) * res.initial_fields[i].values[px];
      field.values[px] = std::max(v, 0.0);
    }
    res.solutions.emplace(mode, sol);
    res.combined.emplace(mode, std::move(field));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Replication studies
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  ModelSpec model;
  Window window;
  int replications = 100;
  BootstrapConfig bootstrap;
  std::vector<AveragingMode> modes = {AveragingMode::av};
  std::uint64_t seed = 0;
  int grid = 128;        // Poisson field resolution
  int raster_res = 1024; // Boolean raster resolution
};

struct ResultRow {
  std::string name;       // estimator or mode name
  std::string parameter;  // target parameter
  double mse = 0.0;
  std::optional<double> se;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  void write_csv(std::ostream& os) const {
    os << "name,parameter,mse,se\n";
    for (const auto& r : rows) {
      os << r.name << ',' << r.parameter << ',' << format_double(r.mse) << ',';
      if (r.se) os << format_double(*r.se);
      os << '\n';
    }
  }
};

namespace detail {

/// Mean and standard error of the mean per column of per-replication
/// squared errors, assembled into table rows.
inline ResultTable summarize_rows(
    const std::vector<std::pair<std::string, std::string>>& names,
    const std::vector<Eigen::VectorXd>& sq_errors) {
  const std::size_t used = sq_errors.size();
  ResultTable table;
  for (std::size_t c = 0; c < names.size(); ++c) {
    double mean = 0.0;
    for (const auto& row : sq_errors) mean += row[c];
    mean /= static_cast<double>(used);
    ResultRow out;
    out.name = names[c].first;
    out.parameter = names[c].second;
    out.mse = mean;
    if (used >= 2) {
      double var = 0.0;
      for (const auto& row : sq_errors) {
        const double d = row[c] - mean;
        var += d * d;
      }
      var /= static_cast<double>(used - 1);
      out.se = std::sqrt(var / static_cast<double>(used));
    }
    table.rows.push_back(std::move(out));
  }
  return table;
}

/// Run R replications of `one_rep` with child streams, excluding failed
/// replications and aborting when more than 1% fail.
inline std::vector<Eigen::VectorXd> run_replications(
    int replications, std::uint64_t seed,
    const std::function<Eigen::VectorXd(RngStream&)>& one_rep) {
  const RngStream root(seed);
  std::vector<Eigen::VectorXd> results(replications);
  std::vector<std::string> failures(replications);
  parallel_for(static_cast<std::size_t>(replications), [&](std::size_t r) {
    RngStream stream = root.child(r);
    try {
      results[r] = one_rep(stream);
    } catch (const Error& e) {
      failures[r] = e.what();
    }
  });
  std::vector<Eigen::VectorXd> kept;
  kept.reserve(replications);
  int nfail = 0;
  std::string report;
  for (int r = 0; r < replications; ++r) {
    if (results[r].size() > 0) {
      kept.push_back(std::move(results[r]));
    } else {
      ++nfail;
      if (nfail <= 5)
        report += "  replication " + std::to_string(r) + ": " + failures[r] +
                  "\n";
    }
  }
  if (nfail > std::max(1, replications / 100))
    throw NonConvergence(std::to_string(nfail) + " of " +
                         std::to_string(replications) +
                         " replications failed:\n" + report);
  if (kept.empty()) throw NonConvergence("all replications failed");
  return kept;
}

inline std::uint64_t derive_seed(RngStream& stream) { return stream(); }

}  // namespace detail

/// Monte Carlo replication study of the averaging pipelines: simulate
/// from the true model, run the family pipeline, tabulate mean squared
/// errors (or integrated squared errors for the Poisson family) with
/// standard errors.  Deterministic given the config.
inline ResultTable run_replication_study(const ExperimentConfig& config) {
  if (config.replications < 1)
    throw InvalidConfig("study needs at least one replication");
  if (config.modes.empty()) throw InvalidConfig("study needs at least one mode");

  std::vector<std::pair<std::string, std::string>> names;
  std::function<Eigen::VectorXd(RngStream&)> one_rep;

  if (const auto* poisson = std::get_if<PoissonModel>(&config.model)) {
    PoissonPipelineOptions opt;
    opt.bootstrap = config.bootstrap;
    opt.modes = config.modes;
    opt.nx = opt.ny = config.grid;
    if (!(config.window == Window(0.0, 1.0, 0.0, 1.0)))
      throw InvalidConfig("Poisson presets are defined on the unit window");
    IntensityField truth(config.window, opt.nx, opt.ny);
    for (int iy = 0; iy < opt.ny; ++iy)
      for (int ix = 0; ix < opt.nx; ++ix)
        truth.at(ix, iy) = poisson_intensity(poisson->preset,
                                             truth.pixel_x(ix),
                                             truth.pixel_y(iy));
    names = {{"kernel:default", "intensity"},
             {"kernel:diggle", "intensity"},
             {"kernel:ppl", "intensity"}};
    for (AveragingMode m : config.modes)
      names.push_back({mode_name(m), "intensity"});
    const PoissonModel model = *poisson;
    one_rep = [model, opt, truth, names](RngStream& stream) {
      RngStream sim = stream.child(0);
      const PointPattern p = simulate_poisson(model, sim);
      PoissonPipelineOptions local = opt;
      local.bootstrap.seed = detail::derive_seed(stream);
      const PoissonPipelineResult res = average_poisson_pipeline(p, local);
      auto ise = [&](const IntensityField& f) {
        double acc = 0.0;
        for (std::size_t px = 0; px < f.values.size(); ++px) {
          const double d = f.values[px] - truth.values[px];
          acc += d * d;
        }
        return acc * truth.pixel_area();
      };
      Eigen::VectorXd out(names.size());
      for (int i = 0; i < 3; ++i) out[i] = ise(res.initial_fields[i]);
      int c = 3;
      for (AveragingMode m : local.modes) out[c++] = ise(res.combined.at(m));
      return out;
    };
  } else if (const auto* dpp = std::get_if<DppGaussModel>(&config.model)) {
    DppPipelineOptions opt;
    opt.bootstrap = config.bootstrap;
    opt.modes = config.modes;
    opt.fit_slope = true;
    names = {{"k", "alpha"}, {"g", "alpha"}, {"palm", "alpha"}};
    for (AveragingMode m : config.modes)
      names.push_back({mode_name(m), "alpha"});
    const DppGaussModel model = *dpp;
    const Window w = config.window;
    one_rep = [model, w, opt, names](RngStream& stream) {
      RngStream sim = stream.child(0);
      const PointPattern p = simulate_dpp_gauss(model, w, sim);
      DppPipelineOptions local = opt;
      local.bootstrap.seed = detail::derive_seed(stream);
      const ScalarPipelineResult res = average_dpp_pipeline(p, local);
      Eigen::VectorXd out(names.size());
      for (int i = 0; i < 3; ++i) {
        const double d = res.initial[i] - model.alpha;
        out[i] = d * d;
      }
      int c = 3;
      for (AveragingMode m : local.modes) {
        const double d = res.modes.at(m).combined[0] - model.alpha;
        out[c++] = d * d;
      }
      return out;
    };
  } else if (const auto* thomas = std::get_if<ThomasModel>(&config.model)) {
    ThomasPipelineOptions opt;
    opt.bootstrap = config.bootstrap;
    opt.modes = config.modes;
    names.clear();
    const std::vector<std::string> methods = {"k", "g", "palm"};
    const std::vector<std::string> params = {"kappa", "sigma2", "mu"};
    for (const auto& par : params)
      for (const auto& m : methods) names.push_back({m, par});
    for (AveragingMode m : config.modes)
      for (const auto& par : params) names.push_back({mode_name(m), par});
    const ThomasModel model = *thomas;
    const Window w = config.window;
    one_rep = [model, w, opt, names](RngStream& stream) {
      RngStream sim = stream.child(0);
      const PointPattern p = simulate_thomas(model, w, sim);
      ThomasPipelineOptions local = opt;
      local.bootstrap.seed = detail::derive_seed(stream);
      const ScalarPipelineResult res = average_thomas_pipeline(p, local);
      const double truth[3] = {model.kappa, model.sigma * model.sigma,
                               model.mu};
      Eigen::VectorXd out(names.size());
      int c = 0;
      for (int par = 0; par < 3; ++par)
        for (int m = 0; m < 3; ++m) {
          const double d = res.initial[3 * par + m] - truth[par];
          out[c++] = d * d;
        }
      for (AveragingMode m : local.modes)
        for (int par = 0; par < 3; ++par) {
          const double d = res.modes.at(m).combined[par] - truth[par];
          out[c++] = d * d;
        }
      return out;
    };
  } else {
    const auto& boolean = std::get<BooleanModel>(config.model);
    BooleanPipelineOptions opt;
    opt.bootstrap = config.bootstrap;
    opt.modes = config.modes;
    opt.raster_res = config.raster_res;
    names = {{"rho1", "rho"}, {"rho2", "rho"}, {"alpha-hat", "alpha"}};
    for (AveragingMode m : config.modes) {
      names.push_back({mode_name(m), "rho"});
      names.push_back({mode_name(m), "alpha"});
    }
    const BooleanModel model = boolean;
    const Window w = config.window;
    one_rep = [model, w, opt, names](RngStream& stream) {
      RngStream sim = stream.child(0);
      const GermGrainSet set = simulate_boolean(model, w, sim);
      BooleanPipelineOptions local = opt;
      local.bootstrap.seed = detail::derive_seed(stream);
      const ScalarPipelineResult res = average_boolean_pipeline(set, local);
      const double truth[3] = {model.rho, model.rho, model.alpha_r};
      Eigen::VectorXd out(names.size());
      for (int i = 0; i < 3; ++i) {
        const double d = res.initial[i] - truth[i];
        out[i] = d * d;
      }
      int c = 3;
      for (AveragingMode m : local.modes) {
        const double dr = res.modes.at(m).combined[0] - model.rho;
        const double da = res.modes.at(m).combined[1] - model.alpha_r;
        out[c++] = dr * dr;
        out[c++] = da * da;
      }
      return out;
    };
  }

  const std::vector<Eigen::VectorXd> sq =
      detail::run_replications(config.replications, config.seed, one_rep);
  return detail::summarize_rows(names, sq);
}

// ---------------------------------------------------------------------------
// Config file parsing
// ---------------------------------------------------------------------------

namespace detail {

inline Window parse_window(const std::string& s) {
  const auto cells = split(s, ',');
  if (cells.size() != 4)
    throw InvalidConfig("window must be 'x0,x1,y0,y1', got '" + s + "'");
  return Window(parse_double(cells[0]), parse_double(cells[1]),
                parse_double(cells[2]), parse_double(cells[3]));
}

}  // namespace detail

/// Build an ExperimentConfig from the key=value map of a config file.
/// Required: family (+ its parameters), replications.  Optional: window,
/// seed, boot_n, boot_seed, modes, grid, raster.
inline ExperimentConfig parse_experiment_config(
    const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InvalidConfig("config key '" + key + "' missing");
    return it->second;
  };
  auto get_or = [&](const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };
  static const std::set<std::string> known = {
      "family", "preset", "beta0",  "beta1",     "alpha", "kappa",
      "mu",     "sigma",  "rho",    "alpha_r",   "window", "replications",
      "seed",   "boot_n", "modes",  "grid",      "raster"};
  for (const auto& [key, value] : kv)
    if (!known.count(key))
      throw InvalidConfig("unknown config key '" + key + "'");

  ExperimentConfig config;
  const std::string family = get("family");
  if (family == "poisson") {
    PoissonModel m;
    m.preset = static_cast<int>(detail::parse_double(get("preset")));
    config.model = m;
  } else if (family == "dpp") {
    DppGaussModel m;
    m.beta0 = detail::parse_double(get("beta0"));
    m.beta1 = detail::parse_double(get_or("beta1", "0"));
    m.alpha = detail::parse_double(get("alpha"));
    config.model = m;
  } else if (family == "thomas") {
    ThomasModel m;
    m.kappa = detail::parse_double(get("kappa"));
    m.mu = detail::parse_double(get("mu"));
    m.sigma = detail::parse_double(get("sigma"));
    config.model = m;
  } else if (family == "boolean") {
    BooleanModel m;
    m.rho = detail::parse_double(get("rho"));
    m.alpha_r = detail::parse_double(get("alpha_r"));
    config.model = m;
  } else {
    throw InvalidConfig("unknown family '" + family + "'");
  }

  config.window = detail::parse_window(get_or("window", "0,1,0,1"));
  config.replications =
      static_cast<int>(detail::parse_double(get("replications")));
  config.seed =
      static_cast<std::uint64_t>(detail::parse_double(get_or("seed", "0")));
  config.bootstrap.n_samples =
      static_cast<int>(detail::parse_double(get_or("boot_n", "100")));
  config.grid = static_cast<int>(detail::parse_double(get_or("grid", "128")));
  config.raster_res =
      static_cast<int>(detail::parse_double(get_or("raster", "1024")));
  config.modes.clear();
  for (const auto& tok : detail::split(get_or("modes", "av"), ','))
    config.modes.push_back(parse_mode(detail::trim(tok)));
  return config;
}

}  // namespace spavg
