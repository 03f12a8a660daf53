#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "spavg/averaging.hpp"
#include "spavg/errors.hpp"
#include "spavg/geometry.hpp"
#include "spavg/parallel.hpp"
#include "spavg/rng.hpp"

namespace spavg {

struct BootstrapConfig {
  int n_samples = 100;       // bootstrap replicates N
  std::uint64_t seed = 0;
  std::string anchor;        // informational: anchor rule or estimator name

  void validate() const {
    if (n_samples < 2) throw InvalidConfig("bootstrap needs n_samples >= 2");
  }
};

namespace detail {

/// Run simulate+evaluate for sample b with up to 3 retries on fresh
/// substreams, as unstable fits inside the loop must not be dropped
/// silently.
template <class Row>
Row bootstrap_sample(
    int b, const RngStream& root,
    const std::function<Row(RngStream&)>& simulate_and_fit) {
  std::string last_error;
  for (int attempt = 0; attempt < 3; ++attempt) {
    RngStream stream = root.child(static_cast<std::uint64_t>(b))
                           .child(static_cast<std::uint64_t>(attempt));
    try {
      return simulate_and_fit(stream);
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw EstimatorFailure(b, "bank", last_error);
}

}  // namespace detail

/// Parametric bootstrap MSE matrix: simulate N samples from the fitted
/// model, refit the whole bank on each, and center at the anchor values
/// a_i of each estimator's target parameter.
///
/// `simulate` draws one observation from the anchor model; `bank_eval`
/// maps an observation to the length-M estimate vector (bank order
/// fixed, matching `labels` and `anchor`).
template <class Obs>
MseMatrix bootstrap_mse_matrix(
    const std::function<Obs(RngStream&)>& simulate,
    const Eigen::VectorXd& anchor,
    const std::function<Eigen::VectorXd(const Obs&, RngStream&)>& bank_eval,
    const std::vector<std::string>& labels, const BootstrapConfig& config) {
  config.validate();
  const Eigen::Index m = anchor.size();
  if (static_cast<Eigen::Index>(labels.size()) != m)
    throw DimensionMismatch("bootstrap labels do not match the anchor vector");

  const RngStream root = RngStream(config.seed);
  const int n = config.n_samples;
  std::vector<Eigen::VectorXd> rows(n);
  std::function<Eigen::VectorXd(RngStream&)> one = [&](RngStream& stream) {
    RngStream sim_stream = stream.child(0);
    RngStream fit_stream = stream.child(1);
    const Obs obs = simulate(sim_stream);
    Eigen::VectorXd est = bank_eval(obs, fit_stream);
    if (est.size() != m)
      throw DimensionMismatch("bank returned a vector of unexpected length");
    return est;
  };
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t b) {
    rows[b] = detail::bootstrap_sample<Eigen::VectorXd>(
        static_cast<int>(b), root, one);
  });

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(m, m);
  for (int b = 0; b < n; ++b) {
    const Eigen::VectorXd c = rows[b] - anchor;
    sigma.noalias() += c * c.transpose();
  }
  sigma /= static_cast<double>(n);
  sigma = ((sigma + sigma.transpose()) / 2.0).eval();
  return MseMatrix(labels, sigma);
}

/// MISE-matrix analogue for function-valued estimators: entries are
/// discretized integrated products of field deviations from the anchor
/// field.
template <class Obs>
MseMatrix bootstrap_mise_matrix(
    const std::function<Obs(RngStream&)>& simulate,
    const IntensityField& rho0,
    const std::function<std::vector<IntensityField>(const Obs&, RngStream&)>&
        field_bank,
    const std::vector<std::string>& labels, const BootstrapConfig& config) {
  config.validate();
  const int m = static_cast<int>(labels.size());
  const int n = config.n_samples;
  const RngStream root = RngStream(config.seed);

  std::vector<Eigen::MatrixXd> partial(n);
  std::function<Eigen::MatrixXd(RngStream&)> one = [&](RngStream& stream) {
    RngStream sim_stream = stream.child(0);
    RngStream fit_stream = stream.child(1);
    const Obs obs = simulate(sim_stream);
    const std::vector<IntensityField> fields = field_bank(obs, fit_stream);
    if (static_cast<int>(fields.size()) != m)
      throw DimensionMismatch("field bank returned an unexpected count");
    for (const auto& f : fields)
      if (!f.same_grid(rho0))
        throw GridMismatch("bootstrap fields disagree on the pixel grid");
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
    const double pa = rho0.pixel_area();
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t px = 0; px < rho0.values.size(); ++px)
          acc += (fields[i].values[px] - rho0.values[px]) *
                 (fields[j].values[px] - rho0.values[px]);
        s(i, j) = s(j, i) = pa * acc;
      }
    return s;
  };
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t b) {
    partial[b] = detail::bootstrap_sample<Eigen::MatrixXd>(
        static_cast<int>(b), root, one);
  });

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(m, m);
  for (int b = 0; b < n; ++b) sigma += partial[b];
  sigma /= static_cast<double>(n);
  return MseMatrix(labels, sigma);
}

}  // namespace spavg
