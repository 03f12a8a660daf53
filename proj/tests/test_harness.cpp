#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spavg/harness.hpp"

using namespace spavg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const Window kUnit(0.0, 1.0, 0.0, 1.0);

}  // namespace

TEST_CASE("mode names parse and print") {
  for (AveragingMode m :
       {AveragingMode::av, AveragingMode::av_plus, AveragingMode::convex})
    CHECK(parse_mode(mode_name(m)) == m);
  CHECK_THROWS_AS(parse_mode("AV"), InvalidConfig);
}

TEST_CASE("per-group convex weights act blockwise") {
  MatrixXd e = MatrixXd::Identity(5, 5);
  e(0, 0) = 1.0;
  e(1, 1) = 4.0;          // group 1: inverse-variance (0.8, 0.2)
  e(2, 2) = 1.0;
  e(3, 3) = 5.0;
  e(2, 3) = e(3, 2) = 2.0;  // group 2: off-diagonal forces a vertex
  const MseMatrix sigma({"a", "b", "c", "d", "e"}, e);
  const GroupStructure groups({2, 2, 1});
  const WeightSolution sol = detail::convex_group_weights(sigma, groups);
  REQUIRE(sol.weights.rows() == 5);
  REQUIRE(sol.weights.cols() == 3);
  CHECK(sol.weights(0, 0) == doctest::Approx(0.8));
  CHECK(sol.weights(1, 0) == doctest::Approx(0.2));
  CHECK(sol.weights(2, 0) == 0.0);  // zero outside the group
  CHECK(sol.weights(2, 1) + sol.weights(3, 1) == doctest::Approx(1.0));
  CHECK(sol.weights.col(1).minCoeff() >= 0.0);
  CHECK(sol.weights(4, 2) == doctest::Approx(1.0));
  CHECK(sol.estimated_mse[0] == doctest::Approx(0.8));  // 1/(1+1/4)
}

TEST_CASE("summarize_rows computes MSE and SE of the mean") {
  std::vector<Eigen::VectorXd> sq;
  VectorXd a(1), b(1), c(1);
  a << 1.0;
  b << 2.0;
  c << 6.0;
  sq = {a, b, c};
  const ResultTable t = detail::summarize_rows({{"est", "theta"}}, sq);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].mse == doctest::Approx(3.0));
  // sample sd = sqrt(7), se = sqrt(7/3)
  CHECK(*t.rows[0].se == doctest::Approx(std::sqrt(7.0 / 3.0)));
  const ResultTable single = detail::summarize_rows({{"est", "theta"}}, {a});
  CHECK(!single.rows[0].se.has_value());
}

TEST_CASE("result table CSV layout") {
  ResultTable t;
  t.rows.push_back({"av", "alpha", 0.25, 0.5});
  t.rows.push_back({"k", "alpha", 1.0, std::nullopt});
  std::stringstream ss;
  t.write_csv(ss);
  CHECK(ss.str() == "name,parameter,mse,se\nav,alpha,0.25,0.5\nk,alpha,1,\n");
}

TEST_CASE("run_replications tolerates 1% failures and aborts above") {
  auto flaky = [](int fail_below) {
    return [fail_below](RngStream& stream) {
      VectorXd v(1);
      const double u = stream.uniform();
      v << u;
      if (u < 0.0) throw NonConvergence("never");
      (void)fail_below;
      return v;
    };
  };
  // explicit index-based failures: fail replication 0 only
  int calls = 0;
  auto one_fail = [&](RngStream& stream) {
    VectorXd v(1);
    v << stream.uniform();
    if (++calls == 1) throw NonConvergence("first replication fails");
    return v;
  };
  set_max_threads(1);
  const auto kept = detail::run_replications(50, 7, one_fail);
  CHECK(kept.size() == 49);
  auto always_fail = [](RngStream&) -> VectorXd {
    throw NonConvergence("bad");
  };
  CHECK_THROWS_AS(detail::run_replications(50, 7, always_fail),
                  NonConvergence);
  set_max_threads(0);
}

TEST_CASE("experiment config parsing") {
  std::stringstream ss(
      "family = thomas\n"
      "kappa = 10\nmu = 10\nsigma = 0.05\n"
      "window = 0,2,0,2\n"
      "replications = 200\n"
      "seed = 42\nboot_n = 50\nmodes = av,av+,convex\n");
  const ExperimentConfig cfg = parse_experiment_config(parse_key_values(ss));
  const auto& m = std::get<ThomasModel>(cfg.model);
  CHECK(m.kappa == 10.0);
  CHECK(m.sigma == 0.05);
  CHECK(cfg.window == Window(0.0, 2.0, 0.0, 2.0));
  CHECK(cfg.replications == 200);
  CHECK(cfg.seed == 42);
  CHECK(cfg.bootstrap.n_samples == 50);
  REQUIRE(cfg.modes.size() == 3);
  CHECK(cfg.modes[1] == AveragingMode::av_plus);
}

TEST_CASE("experiment config rejects bad input") {
  auto parse = [](const std::string& text) {
    std::stringstream ss(text);
    return parse_experiment_config(parse_key_values(ss));
  };
  CHECK_THROWS_AS(parse("family = gibbs\nreplications = 1\n"), InvalidConfig);
  CHECK_THROWS_AS(parse("family = dpp\nalpha = 0.05\n"), InvalidConfig);
  CHECK_THROWS_AS(parse("family = boolean\nrho = 100\nalpha_r = 1\n"
                        "replications = 10\nbogus = 1\n"),
                  InvalidConfig);
  CHECK_THROWS_AS(parse("family = poisson\npreset = 1\nreplications = 5\n"
                        "window = 0,1,0\n"),
                  InvalidConfig);
}

TEST_CASE("DPP pipeline structure") {
  RngStream rng(101);
  const DppGaussModel model{std::log(100.0), 0.0, dpp_alpha_max(100.0)};
  const PointPattern p = simulate_dpp_gauss(model, kUnit, rng);
  DppPipelineOptions opt;
  opt.bootstrap.n_samples = 8;
  opt.bootstrap.seed = 5;
  opt.modes = {AveragingMode::av, AveragingMode::convex};
  const ScalarPipelineResult res = average_dpp_pipeline(p, opt);
  REQUIRE(res.initial.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(res.initial[i] > 0.0);
    CHECK(res.initial[i] <= dpp_alpha_max(50.0));  // generous existence bound
  }
  REQUIRE(res.sigma.size() == 3);
  const auto& av = res.modes.at(AveragingMode::av);
  CHECK(av.solution.weights.col(0).sum() == doctest::Approx(1.0));
  CHECK(av.estimated_mse[0] >= 0.0);
  // combined = weights . initial by definition
  CHECK(av.combined[0] ==
        doctest::Approx(av.solution.weights.col(0).dot(res.initial)));
  const auto& cx = res.modes.at(AveragingMode::convex);
  CHECK(cx.solution.weights.col(0).minCoeff() >= 0.0);
  CHECK(cx.combined[0] >= res.initial.minCoeff() - 1e-12);
  CHECK(cx.combined[0] <= res.initial.maxCoeff() + 1e-12);
}

TEST_CASE("Thomas pipeline obeys the group constraints") {
  RngStream rng(55);
  const ThomasModel model{15.0, 6.0, 0.04};
  const PointPattern p = simulate_thomas(model, kUnit, rng);
  ThomasPipelineOptions opt;
  opt.bootstrap.n_samples = 25;
  opt.bootstrap.seed = 11;
  opt.modes = {AveragingMode::av, AveragingMode::av_plus};
  const ScalarPipelineResult res = average_thomas_pipeline(p, opt);
  REQUIRE(res.initial.size() == 9);
  REQUIRE(res.sigma.size() == 9);
  const Eigen::MatrixXd L = res.groups.selector();
  for (AveragingMode m : opt.modes) {
    const auto& mr = res.modes.at(m);
    REQUIRE(mr.solution.weights.rows() == 9);
    REQUIRE(mr.solution.weights.cols() == 3);
    const Eigen::MatrixXd defect =
        L.transpose() * mr.solution.weights - Eigen::MatrixXd::Identity(3, 3);
    CHECK(defect.cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(mr.combined.size() == 3);
    CHECK(mr.combined[0] > 0.0);  // kappa
  }
  // masked weights place nothing outside the own group
  const auto& av = res.modes.at(AveragingMode::av);
  CHECK(av.solution.weights.block(3, 0, 6, 1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(av.solution.weights.block(0, 1, 3, 1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Boolean pipeline uses foreign rho estimators for alpha") {
  RngStream rng(77);
  const BooleanModel model{60.0, 1.0};
  const GermGrainSet set = simulate_boolean(model, kUnit, rng);
  BooleanPipelineOptions opt;
  opt.raster_res = 256;
  opt.bootstrap.n_samples = 6;
  opt.bootstrap.seed = 3;
  opt.modes = {AveragingMode::av};
  const ScalarPipelineResult res = average_boolean_pipeline(set, opt);
  REQUIRE(res.initial.size() == 3);
  const auto& av = res.modes.at(AveragingMode::av);
  // rho column: weights over (rho1, rho2) sum to 1, alpha weight sums to 0
  CHECK(av.solution.weights(0, 0) + av.solution.weights(1, 0) ==
        doctest::Approx(1.0));
  CHECK(std::abs(av.solution.weights(2, 0)) < 1e-10);
  // alpha column: own weight 1, foreign rho weights sum to 0
  CHECK(av.solution.weights(2, 1) == doctest::Approx(1.0));
  CHECK(std::abs(av.solution.weights(0, 1) + av.solution.weights(1, 1)) <
        1e-10);
  // hence alpha_av = alpha_hat + mu (rho1 - rho2)
  const double mu = av.solution.weights(0, 1);
  CHECK(av.combined[1] ==
        doctest::Approx(res.initial[2] + mu * (res.initial[0] - res.initial[1])));
}

TEST_CASE("Poisson pipeline yields nonnegative combined fields") {
  RngStream rng(9);
  const PointPattern p =
      simulate_poisson_homogeneous(100.0, kUnit, rng);
  PoissonPipelineOptions opt;
  opt.nx = opt.ny = 32;
  opt.bootstrap.n_samples = 5;
  opt.bootstrap.seed = 2;
  opt.modes = {AveragingMode::av};
  const PoissonPipelineResult res = average_poisson_pipeline(p, opt);
  REQUIRE(res.initial_fields.size() == 3);
  REQUIRE(res.sigma.size() == 3);
  const auto& sol = res.solutions.at(AveragingMode::av);
  CHECK(sol.weights.col(0).sum() == doctest::Approx(1.0));
  const IntensityField& f = res.combined.at(AveragingMode::av);
  double lo = 1e300;
  for (double v : f.values) lo = std::min(lo, v);
  CHECK(lo >= 0.0);
  // average field carries roughly the observed mass
  CHECK(f.sum() * f.pixel_area() ==
        doctest::Approx(static_cast<double>(p.size())).epsilon(0.25));
}

TEST_CASE("replication study output is deterministic across thread counts") {
  ExperimentConfig cfg;
  cfg.model = BooleanModel{50.0, 1.0};
  cfg.window = kUnit;
  cfg.replications = 2;
  cfg.seed = 19;
  cfg.bootstrap.n_samples = 5;
  cfg.raster_res = 128;
  cfg.modes = {AveragingMode::av};
  auto run_csv = [&]() {
    const ResultTable t = run_replication_study(cfg);
    std::stringstream ss;
    t.write_csv(ss);
    return ss.str();
  };
  set_max_threads(1);
  const std::string a = run_csv();
  set_max_threads(4);
  const std::string b = run_csv();
  set_max_threads(0);
  CHECK(a == b);
  // expected rows: 3 initial estimators + (rho, alpha) for av
  CHECK(std::count(a.begin(), a.end(), '\n') == 6);
}

TEST_CASE("replication study row names for the DPP family") {
  ExperimentConfig cfg;
  cfg.model = DppGaussModel{std::log(100.0), 0.0, dpp_alpha_max(100.0)};
  cfg.window = kUnit;
  cfg.replications = 1;
  cfg.seed = 4;
  // the slope-augmented intensity fit needs a few more bootstrap samples
  // before the 3x3 MSE matrix is reliably well-conditioned
  cfg.bootstrap.n_samples = 12;
  cfg.modes = {AveragingMode::av};
  const ResultTable t = run_replication_study(cfg);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].name == "k");
  CHECK(t.rows[2].name == "palm");
  CHECK(t.rows[3].name == "av");
  CHECK(t.rows[3].parameter == "alpha");
  CHECK(!t.rows[3].se.has_value());  // single replication
  for (const auto& r : t.rows) CHECK(std::isfinite(r.mse));
}
