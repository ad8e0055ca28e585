// mmse-bounds: bounds on the weighted MMSE sum over a KL ball, sweeps as CSV,
// Monte Carlo verification and a sensor-field config generator.
//
// Exit codes: 0 success, 1 config/validation error, 2 solver failure,
// 3 verification FAIL.

#include <mmse/baselines.hpp>
#include <mmse/bound_solver.hpp>
#include <mmse/config.hpp>
#include <mmse/mc_oracle.hpp>
#include <mmse/prior_library.hpp>
#include <mmse/sensor_field.hpp>
#include <mmse/sweep.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mmse;

enum Exit { kOk = 0, kConfig = 1, kSolver = 2, kVerifyFail = 3 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::LostPositiveDefiniteness:
    case ErrorKind::NoConvergence:
    case ErrorKind::BracketFailure:
    case ErrorKind::SingularSum:
    case ErrorKind::InvariantViolation:
      return kSolver;
    case ErrorKind::DegenerateWeights:
      return kVerifyFail;
    default:
      return kConfig;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

void print_result(std::ostream& out, const BoundResult<double>& r) {
  const char* name = to_string(r.direction);
  out << name << ".bound = " << fmt(r.bound_value) << '\n';
  out << name << ".alpha = " << fmt(r.alpha) << '\n';
  out << name << ".kl = " << fmt(r.kl_at_solution) << '\n';
  out << name << ".kl_residual = " << fmt(r.kl_residual) << '\n';
  out << name << ".fixed_point_residual = " << fmt(r.fixed_point_residual) << '\n';
  out << name << ".iterations = " << r.outer_iterations << " outer, " << r.inner_iterations << " inner\n";
  for (std::size_t j = 0; j < r.summary.per_channel_trace.size(); ++j) {
    out << name << ".mmse[" << j << "] = " << fmt(r.summary.per_channel_trace[j]) << '\n';
  }
  for (const auto& d : r.diagnostics) std::cerr << "note: " << name << ": " << d << '\n';
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": empty list");
  return out;
}

PriorSpec parse_prior(const std::string& text, const ProblemConfig& cfg) {
  if (text == "gaussian") return PriorSpec::gaussian(cfg.mu0, cfg.sigma0);
  const auto colon = text.find(':');
  const std::string family = text.substr(0, colon);
  if (colon == std::string::npos) throw Error(ErrorKind::InvalidArgument, "unknown prior '" + text + "'");
  std::size_t used = 0;
  double value = 0;
  const std::string arg = text.substr(colon + 1);
  try {
    value = std::stod(arg, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != arg.size()) throw Error(ErrorKind::InvalidArgument, "bad prior parameter in '" + text + "'");
  if (family == "gen-gauss") return PriorSpec::generalized_gaussian(value, cfg.dimension);
  if (family == "uniform-ball") return PriorSpec::uniform_ball(value, cfg.dimension);
  throw Error(ErrorKind::InvalidArgument, "unknown prior '" + text + "'");
}

int cmd_bound(const std::string& path, std::optional<double> epsilon) {
  ProblemConfig cfg = load_config(path);
  if (epsilon) cfg.epsilon = *epsilon;
  const Problem<double> problem = to_problem(cfg);
  const auto nominal = weighted_mmse_sum(problem.reference().covariance, problem);
  const auto upper = solve_bound(Direction::Upper, problem);
  const auto lower = solve_bound(Direction::Lower, problem);
  std::cout << "epsilon = " << fmt(problem.epsilon()) << '\n';
  std::cout << "nominal = " << fmt(nominal.weighted_sum) << '\n';
  print_result(std::cout, upper);
  print_result(std::cout, lower);
  return kOk;
}

int emit_csv(SweepKind kind, const std::vector<SweepRecord>& rows, const std::string& out_path) {
  for (const auto& r : rows) {
    for (const auto& n : r.notes) std::cerr << "note: row " << fmt(r.abscissa) << ": " << n << '\n';
  }
  if (out_path.empty()) {
    write_csv(std::cout, kind, rows);
    return kOk;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorKind::Config, "cannot write '" + out_path + "'");
  write_csv(out, kind, rows);
  return kOk;
}

int cmd_sweep(SweepKind kind, const std::string& path, const std::string& grid_text, const std::string& out_path,
              const std::string& ball_variance) {
  const ProblemConfig cfg = load_config(path);
  to_problem(cfg);  // validates the channels
  const auto grid = parse_grid(grid_text);
  SweepOptions opts;
  if (kind == SweepKind::P) return emit_csv(kind, sweep_p(cfg.ensemble, grid, opts), out_path);
  opts.ball_variance = ball_variance == "total" ? BallVariance::Total : BallVariance::Analytic;
  return emit_csv(kind, sweep_ball(cfg.ensemble, grid, opts), out_path);
}

int cmd_verify(const std::string& path, const std::string& prior_text, std::int64_t n_outer, std::int64_t n_inner,
               std::uint64_t seed) {
  const ProblemConfig cfg = load_config(path);
  Problem<double> problem = to_problem(cfg);
  const PriorSpec spec = parse_prior(prior_text, cfg);
  if (!std::holds_alternative<GaussianPrior>(spec.family())) {
    // Centre the ball on the moment-matched Gaussian of the prior.
    const PriorMoments m = prior_moments(spec);
    problem = validate_problem(cfg.ensemble, DivergenceBall<double>{{m.mean, m.covariance}, *m.epsilon_to_best_gaussian});
  }
  const auto upper = solve_bound(Direction::Upper, problem);
  const auto lower = solve_bound(Direction::Lower, problem);
  const McEstimate mc = mc_weighted_sum(spec, problem.ensemble(), n_outer, n_inner, seed);

  const double lo = lower.bound_value - 3 * mc.std_error;
  const double hi = upper.bound_value + 3 * mc.std_error;
  const bool pass = mc.value >= lo && mc.value <= hi;
  std::cout << "prior = " << spec.describe() << '\n';
  std::cout << "epsilon = " << fmt(problem.epsilon()) << '\n';
  std::cout << "mc = " << fmt(mc.value) << " +/- " << fmt(mc.std_error) << " (n_outer " << mc.n_outer << ", n_inner "
            << mc.n_inner << ", seed " << mc.seed << ")\n";
  std::cout << "lower = " << fmt(lower.bound_value) << '\n';
  std::cout << "upper = " << fmt(upper.bound_value) << '\n';
  std::cout << "interval = [" << fmt(lo) << ", " << fmt(hi) << "]\n";
  std::cout << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kOk : kVerifyFail;
}

int cmd_scenario(const std::string& distances, double rho0, double gamma, double m, double sigma0, int dimension,
                 double epsilon, const std::string& lambdas, const std::string& out_path) {
  SensorField field;
  field.distances = parse_list(distances, "--distances");
  field.source_power = rho0;
  field.decay = gamma;
  field.exponent = m;
  field.base_noise = sigma0;
  std::vector<double> weights;
  if (!lambdas.empty()) weights = parse_list(lambdas, "--lambda");

  ProblemConfig cfg;
  cfg.dimension = dimension;
  cfg.ensemble = noise_from_distances(field, dimension, weights);
  cfg.mu0 = VectorXd::Zero(dimension);
  cfg.sigma0 = rho0 * MatrixXd::Identity(dimension, dimension);
  cfg.epsilon = epsilon;
  to_problem(cfg);
  if (out_path.empty() || out_path == "-") {
    std::cout << dump_config(cfg);
  } else {
    write_config(cfg, out_path);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounds on weighted sums of MMSEs for priors in a KL ball around a Gaussian"};
  app.require_subcommand(1);

  std::string config, grid, out, prior = "gaussian", ball_variance = "analytic";
  std::optional<double> epsilon;

  auto* bound = app.add_subcommand("bound", "Upper and lower bound for one config");
  bound->add_option("--config", config, "Problem JSON")->required();
  bound->add_option("--epsilon", epsilon, "Override the divergence radius (nats)");

  auto* sweep_p_cmd = app.add_subcommand("sweep-p", "Generalized Gaussian sweep over p (CSV)");
  sweep_p_cmd->add_option("--config", config, "Problem JSON (channels are used)")->required();
  sweep_p_cmd->add_option("--grid", grid, "start:stop:count or comma list")->required();
  sweep_p_cmd->add_option("--out", out, "CSV output path (default stdout)");

  auto* sweep_ball_cmd = app.add_subcommand("sweep-ball", "Uniform ball sweep over R (CSV)");
  sweep_ball_cmd->add_option("--config", config, "Problem JSON (channels are used)")->required();
  sweep_ball_cmd->add_option("--grid", grid, "start:stop:count or comma list")->required();
  sweep_ball_cmd->add_option("--out", out, "CSV output path (default stdout)");
  sweep_ball_cmd->add_option("--ball-variance", ball_variance, "Reference covariance: analytic = R^2/(K+2) I, total = K R^2/(K+2) I")
      ->check(CLI::IsMember({"analytic", "total"}));

  std::int64_t n_outer = 2000, n_inner = 4000;
  std::uint64_t seed = 1;
  auto* verify = app.add_subcommand("verify", "Monte Carlo check that the true MMSE sum lies between the bounds");
  verify->add_option("--config", config, "Problem JSON")->required();
  verify->add_option("--prior", prior, "gen-gauss:p | uniform-ball:R | gaussian");
  verify->add_option("--n-outer", n_outer, "Outer draws");
  verify->add_option("--n-inner", n_inner, "Importance samples per conditional mean");
  verify->add_option("--seed", seed, "Random seed");

  std::string distances, lambdas;
  double rho0 = 1, gamma = 1, m = 2, sigma0 = 1, scenario_eps = 0;
  int dimension = 1;
  auto* scenario = app.add_subcommand("scenario", "Write a config for sensors under isotropic power attenuation");
  scenario->add_option("--distances", distances, "Sensor distances d1,d2,...")->required();
  scenario->add_option("--rho0", rho0, "Source power rho_0^2")->required();
  scenario->add_option("--gamma", gamma, "Attenuation factor")->required();
  scenario->add_option("--m", m, "Path-loss exponent in [2, 3]")->required();
  scenario->add_option("--sigma0", sigma0, "Base noise variance sigma_0^2")->required();
  scenario->add_option("--out", out, "Config output path")->required();
  scenario->add_option("--dimension", dimension, "Signal dimension K");
  scenario->add_option("--epsilon", scenario_eps, "Divergence radius written to the config");
  scenario->add_option("--lambda", lambdas, "Per-sensor weights (default all 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*bound) return cmd_bound(config, epsilon);
    if (*sweep_p_cmd) return cmd_sweep(SweepKind::P, config, grid, out, ball_variance);
    if (*sweep_ball_cmd) return cmd_sweep(SweepKind::Ball, config, grid, out, ball_variance);
    if (*verify) return cmd_verify(config, prior, n_outer, n_inner, seed);
    if (*scenario) return cmd_scenario(distances, rho0, gamma, m, sigma0, dimension, scenario_eps, lambdas, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.channel()) std::cerr << "  (channel " << *e.channel() << ")\n";
    const int code = exit_code_for(e.kind());
    if (code == kVerifyFail) std::cout << "FAIL\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
  return kConfig;
}
