// Acceptance suite: one criterion per invocation (argv[1] = 1..9).
// Each check prints a single PASS/FAIL line with the measured numbers
// and exits nonzero on failure.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spavg/harness.hpp"

using namespace spavg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const Window kUnit(0.0, 1.0, 0.0, 1.0);

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int report(int crit, const Outcome& o, const std::string& summary) {
  std::printf("criterion %d: %s  %s%s%s\n", crit, o.pass ? "PASS" : "FAIL",
              summary.c_str(), o.detail.empty() ? "" : " | ",
              o.detail.c_str());
  return o.pass ? 0 : 1;
}

double mse_of(const ResultTable& t, const std::string& name,
              const std::string& parameter) {
  for (const auto& r : t.rows)
    if (r.name == name && r.parameter == parameter) return r.mse;
  throw std::runtime_error("row not found: " + name + "/" + parameter);
}

double se_of(const ResultTable& t, const std::string& name,
             const std::string& parameter) {
  for (const auto& r : t.rows)
    if (r.name == name && r.parameter == parameter) return r.se.value();
  throw std::runtime_error("row not found: " + name + "/" + parameter);
}

double joint_se(const ResultTable& t, const std::string& a,
                const std::string& b, const std::string& parameter) {
  const double sa = se_of(t, a, parameter), sb = se_of(t, b, parameter);
  return std::sqrt(sa * sa + sb * sb);
}

// --- criterion 1: weight algebra against independent searches -------------

int criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  RngStream rng(20260823);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 5);  // 2..6
    const MatrixXd s = oracles::random_spd(m, rng);
    std::vector<std::string> labels;
    for (int i = 0; i < m; ++i) labels.push_back("e" + std::to_string(i));
    const MseMatrix sigma(labels, s);

    const VectorXd w = oracle_weights(sigma).weights.col(0);
    const VectorXd w_ref = oracles::affine_oracle(s);
    o.require((w - w_ref).cwiseAbs().maxCoeff() < 1e-3,
              "oracle weights off at trial " + std::to_string(trial));

    const VectorXd wc = convex_weights(sigma).weights.col(0);
    const VectorXd wc_ref = oracles::simplex_oracle(s);
    // compare achieved objective values: distinct minimizers can tie
    const double qp = wc.dot(s * wc), qp_ref = wc_ref.dot(s * wc_ref);
    o.require(qp <= qp_ref + 1e-3 && wc.minCoeff() > -1e-12,
              "convex weights off at trial " + std::to_string(trial));

    if (m >= 4) {
      const GroupStructure groups({m / 2, m - m / 2});
      const Eigen::MatrixXd gw =
          group_weights(sigma, groups, GroupMode::full).weights;
      for (int p = 0; p < 2; ++p) {
        const VectorXd g_ref = oracles::group_oracle(s, groups, p);
        o.require((gw.col(p) - g_ref).cwiseAbs().maxCoeff() < 1e-3,
                  "group weights off at trial " + std::to_string(trial));
      }
    }
    ++checked;
  }

  // closed-form identities at 1e-10
  {
    MatrixXd d = MatrixXd::Zero(3, 3);
    d.diagonal() << 1.0, 2.0, 4.0;
    const MseMatrix sigma({"a", "b", "c"}, d);
    const VectorXd w = oracle_weights(sigma).weights.col(0);
    VectorXd ref(3);
    ref << 1.0, 0.5, 0.25;
    ref /= ref.sum();
    o.require((w - ref).cwiseAbs().maxCoeff() < 1e-10, "diagonal identity");
    const double mse = oracle_weights(sigma).estimated_mse[0];
    o.require(std::abs(mse - 1.0 / 1.75) < 1e-10, "diagonal plug-in MSE");
  }
  {
    RngStream r2(7);
    const MatrixXd s = oracles::random_spd(4, r2);
    const MseMatrix sigma({"a", "b", "c", "d"}, s);
    const MatrixXd gw =
        group_weights(sigma, GroupStructure({4}), GroupMode::full).weights;
    const VectorXd w = oracle_weights(sigma).weights.col(0);
    o.require((gw.col(0) - w).cwiseAbs().maxCoeff() < 1e-10, "P=1 reduction");
  }
  {
    RngStream r2(8);
    MatrixXd s = MatrixXd::Zero(5, 5);
    s.topLeftCorner(3, 3) = oracles::random_spd(3, r2);
    s.bottomRightCorner(2, 2) = oracles::random_spd(2, r2);
    std::vector<std::string> lab = {"a", "b", "c", "d", "e"};
    const MseMatrix sigma(lab, s);
    const MatrixXd gw =
        group_weights(sigma, GroupStructure({3, 2}), GroupMode::full).weights;
    o.require(gw.block(3, 0, 2, 1).cwiseAbs().maxCoeff() < 1e-10 &&
                  gw.block(0, 1, 3, 1).cwiseAbs().maxCoeff() < 1e-10,
              "block-diagonal foreign weights not zero");
    const MseMatrix top({"a", "b", "c"},
                        MatrixXd(s.topLeftCorner(3, 3)));
    o.require((gw.block(0, 0, 3, 1) - oracle_weights(top).weights.col(0))
                      .cwiseAbs()
                      .maxCoeff() < 1e-10,
              "block-diagonal top block");
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  o.require(secs < 10.0, "runtime " + std::to_string(secs) + "s >= 10s");
  std::ostringstream ss;
  ss << checked << " random SPD matrices, " << secs << " s";
  return report(1, o, ss.str());
}

// --- criterion 2: DPP existence bound --------------------------------------

int criterion2() {
  Outcome o;
  const double a100 = dpp_alpha_max(100.0);
  const double a_inh = dpp_alpha_max(4.0 * std::exp(4.0));
  o.require(std::abs(a100 - 0.056) < 5e-4, "alpha_max(100) != 0.056");
  o.require(std::abs(a_inh - 0.038) < 5e-4, "alpha_max(4e^4) != 0.038");
  std::ostringstream ss;
  ss << "alpha_max(100) = " << a100 << ", alpha_max(4e^4) = " << a_inh;
  return report(2, o, ss.str());
}

// --- criterion 3: Poisson intensity study ----------------------------------

int criterion3() {
  ExperimentConfig cfg;
  cfg.model = PoissonModel{1};
  cfg.window = kUnit;
  cfg.replications = 200;
  cfg.bootstrap.n_samples = 100;
  cfg.seed = 31;
  cfg.modes = {AveragingMode::av};
  const ResultTable t = run_replication_study(cfg);
  const double m_def = mse_of(t, "kernel:default", "intensity");
  const double m_dig = mse_of(t, "kernel:diggle", "intensity");
  const double m_ppl = mse_of(t, "kernel:ppl", "intensity");
  const double m_av = mse_of(t, "av", "intensity");
  const double best = std::min({m_def, m_dig, m_ppl});
  Outcome o;
  o.require(m_av <= 1.10 * best, "AV MISE exceeds 1.10 x best initial");
  o.require(m_ppl <= m_def && m_ppl <= m_dig, "ppl is not the best initial");
  std::ostringstream ss;
  ss << "MISE default/diggle/ppl/av = " << m_def << " / " << m_dig << " / "
     << m_ppl << " / " << m_av;
  return report(3, o, ss.str());
}

// --- criterion 4: DPP study -------------------------------------------------

int criterion4() {
  ExperimentConfig cfg;
  cfg.model = DppGaussModel{std::log(100.0), 0.0, dpp_alpha_max(100.0)};
  cfg.window = kUnit;
  cfg.replications = 200;
  cfg.bootstrap.n_samples = 100;
  cfg.seed = 41;
  cfg.modes = {AveragingMode::av};
  const ResultTable t = run_replication_study(cfg);
  const double m_k = mse_of(t, "k", "alpha");
  const double m_g = mse_of(t, "g", "alpha");
  const double m_p = mse_of(t, "palm", "alpha");
  const double m_av = mse_of(t, "av", "alpha");
  Outcome o;
  o.require(m_p < m_k + 2.0 * joint_se(t, "palm", "k", "alpha"),
            "palm not below k within 2 joint SE");
  o.require(m_k < m_g + 2.0 * joint_se(t, "k", "g", "alpha"),
            "k not below g within 2 joint SE");
  o.require(m_av <= 1.10 * m_p, "AV exceeds 1.10 x palm");
  std::ostringstream ss;
  ss << "MSE k/g/palm/av = " << m_k << " / " << m_g << " / " << m_p << " / "
     << m_av << " (av/palm = " << m_av / m_p << ")";
  return report(4, o, ss.str());
}

// --- criterion 5: Thomas study ----------------------------------------------

int criterion5() {
  ExperimentConfig cfg;
  cfg.model = ThomasModel{10.0, 10.0, 0.05};
  cfg.window = Window(0.0, 2.0, 0.0, 2.0);
  cfg.replications = 200;
  cfg.bootstrap.n_samples = 100;
  cfg.seed = 51;
  cfg.modes = {AveragingMode::av, AveragingMode::av_plus};
  const ResultTable t = run_replication_study(cfg);
  const double k_best = std::min({mse_of(t, "k", "kappa"),
                                  mse_of(t, "g", "kappa"),
                                  mse_of(t, "palm", "kappa")});
  const double k_av = mse_of(t, "av", "kappa");
  const double s_av = mse_of(t, "av", "sigma2");
  const double s_avp = mse_of(t, "av+", "sigma2");
  Outcome o;
  o.require(k_av <= k_best, "kappa AV above the best initial");
  o.require(s_avp <= s_av + 2.0 * joint_se(t, "av+", "av", "sigma2"),
            "sigma2 AV+ not below AV within 2 joint SE");
  std::ostringstream ss;
  ss << "kappa best/av = " << k_best << " / " << k_av
     << "; sigma2 av/av+ = " << s_av << " / " << s_avp;
  return report(5, o, ss.str());
}

// --- criterion 6: Boolean study ----------------------------------------------

int criterion6() {
  ExperimentConfig cfg;
  cfg.model = BooleanModel{100.0, 1.0};
  cfg.window = kUnit;
  cfg.replications = 500;
  cfg.bootstrap.n_samples = 100;
  cfg.seed = 61;
  cfg.modes = {AveragingMode::av};
  const ResultTable t = run_replication_study(cfg);
  const double r1 = mse_of(t, "rho1", "rho");
  const double r2 = mse_of(t, "rho2", "rho");
  const double r_av = mse_of(t, "av", "rho");
  const double a_hat = mse_of(t, "alpha-hat", "alpha");
  const double a_av = mse_of(t, "av", "alpha");
  Outcome o;
  o.require(r_av < r1, "rho AV not below rho1");
  o.require(r_av <= 1.10 * r2, "rho AV exceeds 1.10 x rho2");
  o.require(a_av <= 0.70 * a_hat, "alpha AV above 0.7 x alpha-hat");
  std::ostringstream ss;
  ss << "rho1/rho2/av = " << r1 << " / " << r2 << " / " << r_av
     << "; alpha hat/av = " << a_hat << " / " << a_av;
  return report(6, o, ss.str());
}

// --- criterion 7: simulator fidelity ------------------------------------------

struct CountStats {
  double mean = 0.0, var = 0.0, se_mean = 0.0, se_var = 0.0;
};

template <class Sim>
CountStats count_stats(int reps, std::uint64_t seed, const Sim& sim) {
  const RngStream root(seed);
  std::vector<double> n(reps);
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    RngStream stream = root.child(r);
    n[r] = static_cast<double>(sim(stream));
  });
  CountStats s;
  for (double v : n) s.mean += v;
  s.mean /= reps;
  double m2 = 0.0, m4 = 0.0;
  for (double v : n) {
    const double d = v - s.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  s.var = m2 / (reps - 1);
  s.se_mean = std::sqrt(s.var / reps);
  // Var(s^2) ~ (mu4 - sigma^4) / n
  s.se_var = std::sqrt(std::max(m4 / reps - s.var * s.var, 0.0) / reps);
  return s;
}

int criterion7() {
  const int reps = 2000;
  Outcome o;
  std::ostringstream ss;

  // Poisson presets 1-4: mean count vs exact/quadrature integral
  auto preset_integral = [](int preset) {
    const int q = 512;
    double acc = 0.0;
    for (int iy = 0; iy < q; ++iy)
      for (int ix = 0; ix < q; ++ix)
        acc += poisson_intensity(preset, (ix + 0.5) / q, (iy + 0.5) / q);
    return acc / (q * q);
  };
  for (int preset = 1; preset <= 4; ++preset) {
    const double target = preset_integral(preset);
    const PoissonModel model{preset};
    const CountStats s = count_stats(
        reps, 700 + preset, [&](RngStream& rng) {
          return simulate_poisson(model, rng).size();
        });
    o.require(std::abs(s.mean - target) < 2.0 * s.se_mean,
              "Poisson preset " + std::to_string(preset) + " mean count off");
    if (preset == 1)
      ss << "M1 mean " << s.mean << " (target " << target << ")";
  }

  // Thomas: mean kappa*mu*|W|, over-dispersion at 3 SE
  {
    const ThomasModel model{10.0, 10.0, 0.05};
    const CountStats s = count_stats(reps, 710, [&](RngStream& rng) {
      return simulate_thomas(model, kUnit, rng).size();
    });
    o.require(std::abs(s.mean - 100.0) < 2.0 * s.se_mean,
              "Thomas mean count off");
    o.require(s.var - 3.0 * s.se_var > s.mean, "Thomas not over-dispersed");
    ss << "; Thomas mean " << s.mean << " var " << s.var;
  }

  // DPP: mean = rho |W|, under-dispersion at 3 SE.  The count variance
  // is ~50, so the 2-SE band at 2000 replications is only +-0.32 points;
  // 6000 replications tighten it to +-0.18 and keep the false-alarm rate
  // of the fixed-seed gate manageable.
  {
    const DppGaussModel model{std::log(100.0), 0.0, dpp_alpha_max(100.0)};
    const CountStats s = count_stats(3 * reps, 720, [&](RngStream& rng) {
      return simulate_dpp_gauss(model, kUnit, rng).size();
    });
    o.require(std::abs(s.mean - 100.0) < 2.0 * s.se_mean, "DPP mean count off");
    o.require(s.var + 3.0 * s.se_var < s.mean, "DPP not under-dispersed");
    ss << "; DPP mean " << s.mean << " var " << s.var;
  }

  return report(7, o, ss.str());
}

// --- criterion 8: estimator oracles -------------------------------------------

int criterion8() {
  Outcome o;

  // min_contrast idempotence on noiseless theory curves
  {
    const double alpha_true = 0.045;
    const std::vector<double> rgrid = linspace(0.002, 0.25, 160);
    SummaryFunction theory_curve;
    theory_curve.r = rgrid;
    for (double r : rgrid)
      theory_curve.values.push_back(dpp_theory_g(alpha_true, r));
    ContrastConfig cfg;
    cfg.q = 0.5;
    cfg.rmin = 0.01;
    cfg.rmax = 0.25;
    cfg.lower = VectorXd::Constant(1, 0.005);
    cfg.upper = VectorXd::Constant(1, 0.0563);
    const ContrastResult res = min_contrast(
        theory_curve,
        [](const VectorXd& th, double r) { return dpp_theory_g(th[0], r); },
        cfg);
    o.require(res.contrast < 1e-12, "DPP contrast not ~0 at the truth");
    o.require(std::abs(res.params[0] - alpha_true) < 1e-6,
              "DPP contrast fixed point off");
  }
  {
    const double kappa_true = 30.0, sigma_true = 0.02;
    const std::vector<double> rgrid = linspace(0.002, 0.25, 160);
    SummaryFunction theory_curve;
    theory_curve.r = rgrid;
    for (double r : rgrid)
      theory_curve.values.push_back(thomas_theory_k(kappa_true, sigma_true, r));
    ContrastConfig cfg;
    cfg.q = 0.25;
    cfg.rmin = 0.0;
    cfg.rmax = 0.25;
    cfg.lower = Eigen::Vector2d(1.0, 0.002);
    cfg.upper = Eigen::Vector2d(500.0, 0.3);
    const ContrastResult res = min_contrast(
        theory_curve,
        [](const VectorXd& th, double r) {
          return thomas_theory_k(th[0], th[1], r);
        },
        cfg);
    o.require(res.contrast < 1e-12, "Thomas contrast not ~0 at the truth");
    o.require(std::abs(res.params[0] - kappa_true) < 1e-3 &&
                  std::abs(res.params[1] - sigma_true) < 1e-6,
              "Thomas contrast fixed point off");
  }

  // Boolean moment-estimator round trip
  for (double rho : {50.0, 100.0, 200.0})
    for (double alpha : {0.5, 1.0, 2.0}) {
      const BooleanTheory th = boolean_theory(rho, alpha);
      SetMeasurements m;
      m.p_hat = th.p;
      m.la_hat = th.la;
      const BooleanMomentFit fit = boolean_fit_area_perimeter(m);
      o.require(std::abs(fit.rho1 - rho) < 1e-8 * rho &&
                    std::abs(fit.alpha - alpha) < 1e-8,
                "Boolean round trip off at rho=" + std::to_string(rho));
    }

  // Palm and contrast objectives vs brute force on a small pattern
  {
    RngStream rng(88);
    const PointPattern p = simulate_poisson_homogeneous(18.0, kUnit, rng);
    const double R = 0.25;
    const PalmData data = palm_data(p, R);
    const double kappa = 22.0, sigma2 = 0.0016;
    const double got = palm_objective_thomas(data, kappa, sigma2);
    // brute force over ordered pairs
    const double rho_bar = p.intensity();
    double ll = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (i == j) continue;
        const double dx = p.points[i].x - p.points[j].x;
        const double dy = p.points[i].y - p.points[j].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 > R * R) continue;
        const double g =
            1.0 + std::exp(-d2 / (4.0 * sigma2)) / (4.0 * kPi * kappa * sigma2);
        ll += std::log(rho_bar * g);
      }
    // integral of rho g over the disc of radius R (closed form)
    const double integral =
        rho_bar * (kPi * R * R +
                   (1.0 - std::exp(-R * R / (4.0 * sigma2))) / kappa);
    ll -= static_cast<double>(p.size()) * integral;
    o.require(std::abs(got - ll) < 1e-10 * std::max(1.0, std::abs(ll)),
              "Palm objective differs from brute force");

    // contrast objective vs direct trapezoid
    const std::vector<double> rgrid = linspace(0.01, 0.25, 40);
    const SummaryFunction ghat = pcf_estimate(p, rgrid);
    ContrastConfig cfg;
    cfg.q = 0.5;
    cfg.rmin = 0.01;
    cfg.rmax = 0.25;
    VectorXd th(1);
    th << 0.05;
    const auto curve = [](const VectorXd& t, double r) {
      return dpp_theory_g(t[0], r);
    };
    const double cv = contrast_value(ghat, curve, cfg, th);
    double ref = 0.0;
    for (std::size_t i = 0; i + 1 < rgrid.size(); ++i) {
      auto term = [&](std::size_t k) {
        const double a = std::sqrt(std::max(ghat.values[k], 0.0));
        const double b = std::sqrt(dpp_theory_g(th[0], rgrid[k]));
        return (a - b) * (a - b);
      };
      ref += 0.5 * (term(i) + term(i + 1)) * (rgrid[i + 1] - rgrid[i]);
    }
    o.require(std::abs(cv - ref) < 1e-10,
              "contrast objective differs from direct trapezoid");
  }

  // log-linear intensity gradient at the optimum by finite differences
  {
    RngStream rng(89);
    const PointPattern p = simulate_poisson(PoissonModel{4}, rng);
    const LogLinearFit fit = fit_loglinear_intensity(p, true);
    auto loglik = [&](double b0, double b1) {
      double acc = 0.0;
      for (const auto& q : p.points) acc += b0 + b1 * q.x;
      const LogLinearFit f{b0, b1};
      return acc - f.integral(p.window);
    };
    const double h = 1e-6;
    const double g0 =
        (loglik(fit.beta0 + h, fit.beta1) - loglik(fit.beta0 - h, fit.beta1)) /
        (2.0 * h);
    const double g1 =
        (loglik(fit.beta0, fit.beta1 + h) - loglik(fit.beta0, fit.beta1 - h)) /
        (2.0 * h);
    o.require(std::abs(g0) < 1e-4 && std::abs(g1) < 1e-4,
              "log-linear gradient not ~0 (fd noise floor 1e-4)");
  }

  return report(8, o, "contrast fixed points, Boolean round trip, Palm brute "
                      "force, log-linear gradient");
}

// --- criterion 9: reproducibility ----------------------------------------------

int criterion9() {
  ExperimentConfig cfg;
  cfg.model = DppGaussModel{std::log(100.0), 0.0, dpp_alpha_max(100.0)};
  cfg.window = kUnit;
  cfg.replications = 6;
  cfg.bootstrap.n_samples = 30;
  cfg.seed = 91;
  cfg.modes = {AveragingMode::av, AveragingMode::convex};
  auto run_csv = [&]() {
    const ResultTable t = run_replication_study(cfg);
    std::stringstream ss;
    t.write_csv(ss);
    return ss.str();
  };
  set_max_threads(1);
  const std::string a = run_csv();
  const std::string b = run_csv();
  set_max_threads(4);
  const std::string c = run_csv();
  set_max_threads(3);
  const std::string d = run_csv();
  set_max_threads(0);
  Outcome o;
  o.require(a == b, "two serial runs differ");
  o.require(a == c, "4-thread run differs from serial");
  o.require(a == d, "3-thread run differs from serial");
  return report(9, o, "byte-identical CSV across repeats and 1/3/4 threads");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <criterion 1..9>\n");
    return 2;
  }
  const int crit = std::atoi(argv[1]);
  try {
    switch (crit) {
      case 1: return criterion1();
      case 2: return criterion2();
      case 3: return criterion3();
      case 4: return criterion4();
      case 5: return criterion5();
      case 6: return criterion6();
      case 7: return criterion7();
      case 8: return criterion8();
      case 9: return criterion9();
      default:
        std::fprintf(stderr, "unknown criterion %d\n", crit);
        return 2;
    }
  } catch (const std::exception& e) {
    std::printf("criterion %d: FAIL  uncaught error: %s\n", crit, e.what());
    return 1;
  }
}
