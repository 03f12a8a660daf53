// Command-line front end: simulate the four model families, fit single
// estimators, run the averaging pipeline on one dataset, or run a full
// replication experiment from a config file.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "spavg/harness.hpp"

using namespace spavg;

namespace {

std::map<std::string, double> parse_params(const std::string& text) {
  std::map<std::string, double> out;
  if (detail::trim(text).empty()) return out;
  for (const auto& tok : detail::split(text, ',')) {
    const std::size_t eq = tok.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig("--params entries must look like key=value, got '" +
                          tok + "'");
    out[detail::trim(tok.substr(0, eq))] =
        detail::parse_double(detail::trim(tok.substr(eq + 1)));
  }
  return out;
}

double param_or(const std::map<std::string, double>& p, const std::string& key,
                double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

double param_req(const std::map<std::string, double>& p,
                 const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end())
    throw InvalidConfig("--params is missing required key '" + key + "'");
  return it->second;
}

ModelSpec make_model(const std::string& name,
                     const std::map<std::string, double>& p) {
  if (name == "poisson1" || name == "poisson2" || name == "poisson3" ||
      name == "poisson4")
    return PoissonModel{name.back() - '0'};
  if (name == "dpp") {
    DppGaussModel m;
    m.beta0 = param_or(p, "beta0", std::log(100.0));
    m.beta1 = param_or(p, "beta1", 0.0);
    m.alpha = param_req(p, "alpha");
    return m;
  }
  if (name == "thomas") {
    ThomasModel m;
    m.kappa = param_req(p, "kappa");
    m.mu = param_req(p, "mu");
    m.sigma = param_req(p, "sigma");
    return m;
  }
  if (name == "boolean") {
    BooleanModel m;
    m.rho = param_req(p, "rho");
    m.alpha_r = param_req(p, "alpha_r");
    return m;
  }
  throw InvalidConfig("unknown model '" + name + "'");
}

int cmd_simulate(const std::string& model_name, const std::string& params,
                 const std::string& window_text, std::uint64_t seed,
                 const std::string& out_path) {
  const ModelSpec model = make_model(model_name, parse_params(params));
  const Window w = detail::parse_window(window_text);
  RngStream rng(seed);
  std::ofstream os = open_output(out_path);
  if (const auto* poisson = std::get_if<PoissonModel>(&model)) {
    if (!(w == Window(0.0, 1.0, 0.0, 1.0)))
      throw InvalidConfig("Poisson presets are defined on the unit window");
    write_pattern(os, simulate_poisson(*poisson, rng));
  } else if (const auto* dpp = std::get_if<DppGaussModel>(&model)) {
    write_pattern(os, simulate_dpp_gauss(*dpp, w, rng));
  } else if (const auto* thomas = std::get_if<ThomasModel>(&model)) {
    write_pattern(os, simulate_thomas(*thomas, w, rng));
  } else {
    write_germ_grain(os, simulate_boolean(std::get<BooleanModel>(model), w, rng));
  }
  return 0;
}

void emit_record(std::ostream& os, const std::string& estimator,
                 const std::vector<std::string>& names,
                 const std::vector<double>& values,
                 const std::map<std::string, bool>& flags = {}) {
  FitRecord rec;
  rec.estimator = estimator;
  rec.parameter_names = names;
  rec.values = values;
  rec.flags = flags;
  write_fit_record(os, rec);
}

int cmd_fit(const std::string& family, const std::string& method,
            const std::string& in_path, const std::string& out_path) {
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_output(out_path);
    os = &file;
  }

  if (family == "poisson") {
    if (method.rfind("kernel:", 0) != 0)
      throw InvalidConfig("poisson fits use kernel:default|diggle|ppl");
    std::ifstream is = open_input(in_path);
    const PointPattern p = read_pattern(is);
    const std::string rule = method.substr(7);
    BandwidthRule r;
    if (rule == "default")
      r = BandwidthRule::default_rule;
    else if (rule == "diggle")
      r = BandwidthRule::diggle;
    else if (rule == "ppl")
      r = BandwidthRule::ppl;
    else
      throw InvalidConfig("unknown bandwidth rule '" + rule + "'");
    const double b = select_bandwidth(p, r);
    emit_record(*os, method, {"bandwidth"}, {b});
    return 0;
  }

  if (family == "boolean") {
    std::ifstream is = open_input(in_path);
    const GermGrainSet set = read_germ_grain(is);
    const SetMeasurements m = measure_set(set, set.window);
    if (method == "area-perim") {
      const BooleanMomentFit fit = boolean_fit_area_perimeter(m);
      emit_record(*os, method, {"rho", "alpha"}, {fit.rho1, fit.alpha},
                  {{"alpha_clamped", fit.alpha_clamped}});
    } else if (method == "tangent") {
      emit_record(*os, method, {"rho"}, {boolean_fit_tangent(m, set.window)});
    } else {
      throw InvalidConfig("boolean fits use area-perim or tangent");
    }
    return 0;
  }

  if (family != "dpp" && family != "thomas")
    throw InvalidConfig("unknown family '" + family + "'");
  std::ifstream is = open_input(in_path);
  const PointPattern p = read_pattern(is);
  if (family == "dpp") {
    const Eigen::VectorXd bank = spavg::detail::dpp_bank(p, false);
    const std::map<std::string, int> idx = {{"k", 0}, {"pcf", 1}, {"palm", 2}};
    if (!idx.count(method))
      throw InvalidConfig("dpp fits use k, pcf, or palm");
    emit_record(*os, method, {"alpha"}, {bank[idx.at(method)]});
  } else {
    const Eigen::VectorXd bank = spavg::detail::thomas_bank(p);
    const std::map<std::string, int> idx = {{"k", 0}, {"pcf", 1}, {"palm", 2}};
    if (!idx.count(method))
      throw InvalidConfig("thomas fits use k, pcf, or palm");
    const int m = idx.at(method);
    emit_record(*os, method, {"kappa", "sigma2", "mu"},
                {bank[m], bank[3 + m], bank[6 + m]});
  }
  return 0;
}

nlohmann::json solution_json(const std::vector<std::string>& labels,
                             const std::vector<std::string>& params,
                             const ModeResult& mr) {
  nlohmann::json j;
  j["weights"] = nlohmann::json::object();
  for (std::size_t p = 0; p < params.size(); ++p) {
    nlohmann::json col = nlohmann::json::object();
    for (std::size_t i = 0; i < labels.size(); ++i)
      col[labels[i]] = mr.solution.weights(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(p));
    j["weights"][params[p]] = col;
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    j["estimate"][params[p]] = mr.combined[static_cast<Eigen::Index>(p)];
    j["estimated_mse"][params[p]] =
        mr.estimated_mse[static_cast<Eigen::Index>(p)];
  }
  return j;
}

int cmd_average(const std::string& family, const std::string& modes_text,
                int boot_n, std::uint64_t boot_seed,
                const std::string& in_path, const std::string& out_path) {
  std::vector<AveragingMode> modes;
  for (const auto& tok : detail::split(modes_text, ','))
    modes.push_back(parse_mode(detail::trim(tok)));

  nlohmann::json out;
  out["family"] = family;

  if (family == "poisson") {
    std::ifstream is = open_input(in_path);
    const PointPattern p = read_pattern(is);
    PoissonPipelineOptions opt;
    opt.bootstrap.n_samples = boot_n;
    opt.bootstrap.seed = boot_seed;
    opt.modes = modes;
    const PoissonPipelineResult res = average_poisson_pipeline(p, opt);
    for (std::size_t i = 0; i < res.labels.size(); ++i) {
      const auto& f = res.initial_fields[i];
      out["initial_mass"][res.labels[i]] = f.sum() * f.pixel_area();
    }
    for (Eigen::Index i = 0; i < res.sigma.size(); ++i)
      for (Eigen::Index j = 0; j < res.sigma.size(); ++j)
        out["mise_matrix"][res.sigma.labels[i]][res.sigma.labels[j]] =
            res.sigma.entries(i, j);
    for (const auto& [mode, sol] : res.solutions) {
      nlohmann::json jm;
      for (std::size_t i = 0; i < res.labels.size(); ++i)
        jm["weights"][res.labels[i]] =
            sol.weights(static_cast<Eigen::Index>(i), 0);
      jm["estimated_mise"] = sol.estimated_mse[0];
      out["modes"][mode_name(mode)] = jm;
      // the combined field itself goes to a sibling CSV file
      std::ofstream fos =
          open_output(out_path + "." + mode_name(mode) + ".field.csv");
      write_field_csv(fos, res.combined.at(mode));
    }
  } else {
    ScalarPipelineResult res;
    if (family == "dpp") {
      std::ifstream is = open_input(in_path);
      DppPipelineOptions opt;
      opt.bootstrap.n_samples = boot_n;
      opt.bootstrap.seed = boot_seed;
      opt.modes = modes;
      res = average_dpp_pipeline(read_pattern(is), opt);
    } else if (family == "thomas") {
      std::ifstream is = open_input(in_path);
      ThomasPipelineOptions opt;
      opt.bootstrap.n_samples = boot_n;
      opt.bootstrap.seed = boot_seed;
      opt.modes = modes;
      res = average_thomas_pipeline(read_pattern(is), opt);
    } else if (family == "boolean") {
      std::ifstream is = open_input(in_path);
      BooleanPipelineOptions opt;
      opt.bootstrap.n_samples = boot_n;
      opt.bootstrap.seed = boot_seed;
      opt.modes = modes;
      res = average_boolean_pipeline(read_germ_grain(is), opt);
    } else {
      throw InvalidConfig("unknown family '" + family + "'");
    }
    for (std::size_t i = 0; i < res.labels.size(); ++i)
      out["initial"][res.labels[i]] =
          res.initial[static_cast<Eigen::Index>(i)];
    for (Eigen::Index i = 0; i < res.sigma.size(); ++i)
      for (Eigen::Index j = 0; j < res.sigma.size(); ++j)
        out["mse_matrix"][res.sigma.labels[i]][res.sigma.labels[j]] =
            res.sigma.entries(i, j);
    for (const auto& [mode, mr] : res.modes)
      out["modes"][mode_name(mode)] =
          solution_json(res.labels, res.parameter_names, mr);
  }

  std::ofstream os = open_output(out_path);
  os << out.dump(2) << '\n';
  return 0;
}

int cmd_experiment(const std::string& config_path,
                   const std::string& out_path) {
  std::ifstream is = open_input(config_path);
  const ExperimentConfig cfg = parse_experiment_config(parse_key_values(is));
  const ResultTable table = run_replication_study(cfg);
  std::ofstream os = open_output(out_path);
  table.write_csv(os);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimator averaging for spatial point process models"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = hardware)");

  auto* sim = app.add_subcommand("simulate", "draw one realization of a model");
  std::string model, params, window = "0,1,0,1", out, in, family, method;
  std::uint64_t seed = 0;
  sim->add_option("--model", model,
                  "poisson1..poisson4, dpp, thomas, or boolean")
      ->required();
  sim->add_option("--params", params, "model parameters as key=value,...");
  sim->add_option("--window", window, "observation window x0,x1,y0,y1");
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--out", out, "output CSV path")->required();

  auto* fit = app.add_subcommand("fit", "run one estimator on a dataset");
  fit->add_option("--family", family, "poisson, dpp, thomas, or boolean")
      ->required();
  fit->add_option("--method", method,
                  "k|pcf|palm|area-perim|tangent|kernel:default|"
                  "kernel:diggle|kernel:ppl")
      ->required();
  fit->add_option("--in", in, "input CSV path")->required();
  fit->add_option("--out", out, "fit record path (default stdout)");

  auto* avg = app.add_subcommand("average", "averaging pipeline on a dataset");
  std::string modes = "av";
  int boot_n = 100;
  std::uint64_t boot_seed = 0;
  avg->add_option("--family", family, "poisson, dpp, thomas, or boolean")
      ->required();
  avg->add_option("--modes", modes, "comma list of av, av+, convex");
  avg->add_option("--boot-n", boot_n, "bootstrap samples");
  avg->add_option("--boot-seed", boot_seed, "bootstrap RNG seed");
  avg->add_option("--in", in, "input CSV path")->required();
  avg->add_option("--out", out, "output JSON path")->required();

  auto* exp = app.add_subcommand("experiment", "replication study from config");
  std::string config;
  exp->add_option("--config", config, "key=value config file")->required();
  exp->add_option("--out", out, "output CSV table")->required();

  CLI11_PARSE(app, argc, argv);
  set_max_threads(threads);

  try {
    if (sim->parsed()) return cmd_simulate(model, params, window, seed, out);
    if (fit->parsed()) return cmd_fit(family, method, in, out);
    if (avg->parsed())
      return cmd_average(family, modes, boot_n, boot_seed, in, out);
    return cmd_experiment(config, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
