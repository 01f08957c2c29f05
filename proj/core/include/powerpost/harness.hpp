#pragma once

// Batch experiment runner: sweeps (model, process, prior, n, alpha, seed)
// cells through the full pipeline (sample -> MLE -> curvature -> grid
// posterior -> LAN frame -> limiting Gaussian -> diagnostics) and emits
// machine-readable convergence tables.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "powerpost/diagnostics.hpp"
#include "powerpost/posterior.hpp"

namespace powerpost {

struct ExperimentConfig {
  std::string model = "gaussian_location";
  std::string process = "gaussian";
  std::string prior = "gaussian_wide";
  std::vector<int> n_sequence;
  std::vector<double> alpha_set;
  std::vector<std::uint64_t> seeds;
  DiagnosticsConfig diagnostics;
  AlphaConfig grid;           // alpha is overridden per cell
  double lan_halfwidth = 3.0; // compact set K = [-lan_halfwidth, +]^p
  int lan_points = 61;
  std::string output_path = "out";

  // Resolves component names and checks sequence invariants; throws
  // config_error before any computation starts.
  void validate() const;
};

// Key-value config file ("key = value", '#' comments). See the README for the
// schema. Throws config_error on unreadable files or unknown keys.
ExperimentConfig load_config(const std::string& path);

struct PointEstimateRow {
  int n = 0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  Vec theta_bayes;   // grid first moment in the theta frame
  Vec theta_mle;
  Vec gap;           // sqrt(n) (theta_bayes - theta_mle)
  Vec scaled_error;  // sqrt(n) (theta_bayes - theta_star)
};

struct CellResult {
  DiagnosticsReport report;
  PointEstimateRow row;
  Mat v_tilde;  // sandwich estimate at theta_star for this cell
};

// One pipeline cell; deterministic per (config, n, alpha, seed).
CellResult run_cell(const ExperimentConfig& cfg, int n, double alpha,
                    std::uint64_t seed);

struct CellBatch {
  std::vector<CellResult> cells;       // successes, in canonical cell order
  std::vector<std::string> failures;   // labeled error messages
  std::size_t total = 0;
  double failed_fraction() const {
    return total == 0 ? 0.0
                      : static_cast<double>(failures.size()) /
                            static_cast<double>(total);
  }
};

// Evaluates every (n, alpha, seed) cell of the config; cells run concurrently
// (threads <= 0 consults POWERPOST_THREADS, then hardware_concurrency) but the
// result order is canonical, so outputs are byte-identical regardless of the
// thread count. Failed cells are recorded and skipped.
CellBatch run_cells(const ExperimentConfig& cfg, int threads = 0);

struct SweepResult {
  CellBatch batch;
  std::string diagnostics_path;
  std::string point_estimates_path;
  std::string summary_path;
};

// run_cells plus the three output files under cfg.output_path.
SweepResult run_sweep(const ExperimentConfig& cfg, int threads = 0);

void write_diagnostics_csv(std::ostream& out,
                           const std::vector<CellResult>& cells);
void write_point_estimates_csv(std::ostream& out, const std::vector<CellResult>& cells);
std::string summary_json(const ExperimentConfig& cfg, const CellBatch& batch);

struct InequalitySweep {
  int instances = 0;
  int moment_ratio_violations = 0;
  int tail_moment_violations = 0;
  int markov_violations = 0;
  int z0_bound_violations = 0;
  int symmetry_violations = 0;
  std::vector<std::string> messages;
  int total_violations() const {
    return moment_ratio_violations + tail_moment_violations + markov_violations +
           z0_bound_violations + symmetry_violations;
  }
};

// Random-instance property sweep over Gaussian and Student-t grid pairs:
// the moment/likelihood-ratio bound, the tail-moment bound, the Markov
// concentration bound, z0 <= z_upper, and the f-/f+ swap identity.
InequalitySweep check_inequalities(int instances, std::uint64_t seed);

}  // namespace powerpost
