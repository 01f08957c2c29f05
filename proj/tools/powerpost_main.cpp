// powerpost: power-posterior inference and convergence diagnostics.
//
// Subcommands:
//   fit          one dataset -> MLE, curvature, posterior summary
//   diagnose     one (n, alpha, seed) cell -> diagnostics report
//   sweep        full experiment sweep from a config file
//   check-lemmas random-instance property sweeps of the bound inequalities
//
// Exit codes: 0 success, 1 configuration error, 2 numerical error,
// 3 property violation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "powerpost/errors.hpp"
#include "powerpost/families.hpp"
#include "powerpost/harness.hpp"
#include "powerpost/numeric.hpp"

namespace {

using namespace powerpost;

void print_vec(std::ostream& out, const Vec& v) {
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (j) out << ' ';
    out << fmt_g17(v[j]);
  }
}

struct FitOptions {
  std::string model;
  std::string prior = "flat_wide";
  std::string process;
  std::string data_path;
  double alpha = 1.0;
  int n = 1000;
  std::uint64_t seed = 1;
  std::string out_path;
};

int run_fit(const FitOptions& opt) {
  const ModelSpec& model = find_model(opt.model);
  const Prior& prior = find_prior(opt.prior);

  Dataset data;
  if (!opt.data_path.empty()) {
    std::ifstream in(opt.data_path);
    if (!in) throw config_error("cannot open dataset '" + opt.data_path + "'");
    data = read_dataset(in);
    if (data.empty()) throw config_error("dataset '" + opt.data_path + "' is empty");
  } else if (!opt.process.empty()) {
    data = sample_data(find_process(opt.process), opt.n, opt.seed);
  } else {
    throw config_error("fit: provide --data FILE or --process NAME");
  }

  Vec start = Vec::Zero(model.dim_p);
  const MleFit fit = fit_mle(model, data, start);
  const CurvatureEstimates curv =
      estimate_curvature_robust(model, data, fit.theta_hat);

  AlphaConfig cfg;
  cfg.alpha = opt.alpha;
  const GridDensity post = normalize_on_grid(model, prior, data, cfg, fit, curv);
  const Vec post_mean = grid_mean(post);
  const Mat post_cov = grid_covariance(post);

  std::cout << "model: " << model.name << "  prior: " << prior.name
            << "  n: " << data.size() << "  alpha: " << fmt_g17(opt.alpha)
            << '\n';
  std::cout << "theta_mle: ";
  print_vec(std::cout, fit.theta_hat);
  std::cout << "\nlog_lik_at_max: " << fmt_g17(fit.log_lik_at_max)
            << "  iterations: " << fit.iterations << '\n';
  std::cout << "posterior_mean: ";
  print_vec(std::cout, post_mean);
  std::cout << "\nposterior_cov:";
  for (Eigen::Index r = 0; r < post_cov.rows(); ++r) {
    std::cout << ' ';
    for (Eigen::Index c = 0; c < post_cov.cols(); ++c) {
      if (c) std::cout << ' ';
      std::cout << fmt_g17(post_cov(r, c));
    }
    if (r + 1 < post_cov.rows()) std::cout << " |";
  }
  std::cout << '\n' << curvature_to_json(curv) << '\n';

  if (!opt.out_path.empty()) {
    std::ofstream out(opt.out_path);
    if (!out) throw config_error("cannot write '" + opt.out_path + "'");
    write_grid_csv(out, post);
    std::cout << "posterior grid written to " << opt.out_path << '\n';
  }
  return 0;
}

int run_diagnose(const std::string& config_path, int n, double alpha,
                 std::uint64_t seed, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  const CellResult cell = run_cell(cfg, n, alpha, seed);
  std::vector<CellResult> cells;
  cells.push_back(cell);
  write_diagnostics_csv(std::cout, cells);
  std::cout << "theta_bayes: ";
  print_vec(std::cout, cell.row.theta_bayes);
  std::cout << "\ntheta_mle:   ";
  print_vec(std::cout, cell.row.theta_mle);
  std::cout << "\ngap (sqrt(n) scaled): ";
  print_vec(std::cout, cell.row.gap);
  std::cout << '\n';
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/diagnostics.csv";
    std::ofstream out(path);
    if (!out) throw config_error("cannot write '" + path + "'");
    write_diagnostics_csv(out, cells);
    std::cout << "report written to " << path << '\n';
  }
  return 0;
}

int run_sweep_cmd(const std::string& config_path, const std::string& out_dir,
                  int threads) {
  ExperimentConfig cfg = load_config(config_path);
  if (!out_dir.empty()) cfg.output_path = out_dir;
  const SweepResult result = run_sweep(cfg, threads);
  std::cout << "cells: " << result.batch.total
            << "  succeeded: " << result.batch.cells.size()
            << "  failed: " << result.batch.failures.size() << '\n';
  for (const auto& failure : result.batch.failures)
    std::cerr << "failed " << failure << '\n';
  std::cout << "wrote " << result.diagnostics_path << '\n'
            << "wrote " << result.point_estimates_path << '\n'
            << "wrote " << result.summary_path << '\n';
  if (result.batch.failed_fraction() > 0.05) {
    std::cerr << "more than 5% of cells failed\n";
    return 2;
  }
  return 0;
}

int run_check_inequalities(int instances, std::uint64_t seed) {
  const InequalitySweep sweep = check_inequalities(instances, seed);
  std::cout << "instances: " << sweep.instances << '\n'
            << "moment/likelihood-ratio bound violations: "
            << sweep.moment_ratio_violations << '\n'
            << "tail-moment bound violations: " << sweep.tail_moment_violations
            << '\n'
            << "Markov concentration bound violations: "
            << sweep.markov_violations << '\n'
            << "z0 <= z_upper violations: " << sweep.z0_bound_violations << '\n'
            << "f-/f+ swap identity violations: " << sweep.symmetry_violations
            << '\n'
            << "total: " << sweep.total_violations() << '\n';
  for (const auto& msg : sweep.messages) std::cerr << msg << '\n';
  if (sweep.total_violations() > 0)
    throw property_violation("check-lemmas found violated inequalities");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"power-posterior inference and convergence diagnostics"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "fit one dataset");
  fit_cmd->add_option("--model", fit_opt.model, "model name")->required();
  fit_cmd->add_option("--prior", fit_opt.prior, "prior name");
  fit_cmd->add_option("--data", fit_opt.data_path, "dataset file (one observation per line)");
  fit_cmd->add_option("--process", fit_opt.process, "generate data from this process");
  fit_cmd->add_option("--n", fit_opt.n, "sample size when generating");
  fit_cmd->add_option("--seed", fit_opt.seed, "seed when generating");
  fit_cmd->add_option("--alpha", fit_opt.alpha, "likelihood power");
  fit_cmd->add_option("--out", fit_opt.out_path, "write the posterior grid CSV here");

  std::string diag_config, diag_out;
  int diag_n = 1000;
  double diag_alpha = 1.0;
  std::uint64_t diag_seed = 1;
  auto* diag_cmd = app.add_subcommand("diagnose", "diagnostics for one cell");
  diag_cmd->add_option("--config", diag_config, "experiment config file")->required();
  diag_cmd->add_option("--n", diag_n, "sample size")->required();
  diag_cmd->add_option("--alpha", diag_alpha, "likelihood power")->required();
  diag_cmd->add_option("--seed", diag_seed, "cell seed");
  diag_cmd->add_option("--out", diag_out, "directory for the CSV report");

  std::string sweep_config, sweep_out;
  int sweep_threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "run the full experiment sweep");
  sweep_cmd->add_option("--config", sweep_config, "experiment config file")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory (overrides config)");
  sweep_cmd->add_option("--threads", sweep_threads,
                        "worker threads (0: POWERPOST_THREADS or hardware)");

  int sweep_instances = 100;
  std::uint64_t sweep_seed = 1;
  auto* sweep_check_cmd =
      app.add_subcommand("check-lemmas", "random-instance inequality sweeps");
  sweep_check_cmd->add_option("--instances", sweep_instances, "instance count");
  sweep_check_cmd->add_option("--seed", sweep_seed, "master seed");

  try {
    app.parse(argc, argv);
    if (*fit_cmd) return run_fit(fit_opt);
    if (*diag_cmd)
      return run_diagnose(diag_config, diag_n, diag_alpha, diag_seed, diag_out);
    if (*sweep_cmd) return run_sweep_cmd(sweep_config, sweep_out, sweep_threads);
    if (*sweep_check_cmd) return run_check_inequalities(sweep_instances, sweep_seed);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const powerpost::config_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const powerpost::property_violation& e) {
    std::cerr << "property violation: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  }
}
