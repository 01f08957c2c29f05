#include "powerpost/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "powerpost/errors.hpp"
#include "powerpost/families.hpp"
#include "powerpost/numeric.hpp"
#include "powerpost/rng.hpp"

namespace powerpost {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(trim(part));
  return parts;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw config_error("config: cannot parse '" + v + "' for key '" + key + "'");
  }
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long out = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw config_error("config: cannot parse '" + v + "' for key '" + key + "'");
  }
}

// Pseudo-true parameters for oracle processes are expensive; cache them per
// (process, model) pair.
Vec pseudo_true_for(const TrueProcess& process, const ModelSpec& model) {
  if (process.pseudo_true) return *process.pseudo_true;
  static std::map<std::string, Vec> cache;
  static std::mutex mutex;
  const std::string key = process.name + "/" + model.name;
  {
    std::lock_guard<std::mutex> lock(mutex);
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  Vec value = pseudo_true_parameter(process, model);
  std::lock_guard<std::mutex> lock(mutex);
  return cache.emplace(key, std::move(value)).first->second;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("POWERPOST_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void ExperimentConfig::validate() const {
  const ModelSpec& m = find_model(model);  // throws config_error when unknown
  find_process(process);
  find_prior(prior);
  if (n_sequence.empty())
    throw config_error("config: n_sequence must not be empty");
  for (std::size_t i = 0; i < n_sequence.size(); ++i) {
    if (n_sequence[i] < 1) throw config_error("config: n values must be >= 1");
    if (i > 0 && n_sequence[i] <= n_sequence[i - 1])
      throw config_error("config: n_sequence must be strictly increasing");
  }
  if (alpha_set.empty()) throw config_error("config: alphas must not be empty");
  for (double a : alpha_set)
    if (!(a > 0.0)) throw config_error("config: alphas must be positive");
  if (seeds.empty()) throw config_error("config: at least one seed is required");
  diagnostics.validate();
  AlphaConfig probe = grid;
  probe.alpha = alpha_set.front();
  probe.validate(m.dim_p);
  if (!(lan_halfwidth > 0.0) || lan_points < 2)
    throw config_error("config: bad LAN grid settings");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");

  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(line_no) +
                         ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "model") {
      cfg.model = value;
    } else if (key == "process") {
      cfg.process = value;
    } else if (key == "prior") {
      cfg.prior = value;
    } else if (key == "n_sequence") {
      cfg.n_sequence.clear();
      for (const auto& part : split(value, ','))
        cfg.n_sequence.push_back(static_cast<int>(parse_long(part, key)));
    } else if (key == "alphas") {
      cfg.alpha_set.clear();
      for (const auto& part : split(value, ','))
        cfg.alpha_set.push_back(parse_double(part, key));
    } else if (key == "seeds") {
      cfg.seeds.clear();
      const auto range = value.find("..");
      if (range != std::string::npos) {
        const long lo = parse_long(trim(value.substr(0, range)), key);
        const long hi = parse_long(trim(value.substr(range + 2)), key);
        if (hi < lo) throw config_error("config: empty seed range '" + value + "'");
        for (long s = lo; s <= hi; ++s)
          cfg.seeds.push_back(static_cast<std::uint64_t>(s));
      } else {
        for (const auto& part : split(value, ','))
          cfg.seeds.push_back(static_cast<std::uint64_t>(parse_long(part, key)));
      }
    } else if (key == "k") {
      cfg.diagnostics.k = static_cast<int>(parse_long(value, key));
    } else if (key == "k0") {
      cfg.diagnostics.k0 = static_cast<int>(parse_long(value, key));
    } else if (key == "gamma") {
      cfg.diagnostics.gamma = parse_double(value, key);
    } else if (key == "eta") {
      cfg.diagnostics.eta = parse_double(value, key);
    } else if (key == "epsilon") {
      cfg.diagnostics.epsilon = parse_double(value, key);
    } else if (key == "r") {
      cfg.diagnostics.r = value == "auto" ? 0.0 : parse_double(value, key);
    } else if (key == "grid_halfwidth_se") {
      cfg.grid.grid_halfwidth_se = parse_double(value, key);
    } else if (key == "nodes_per_dim") {
      cfg.grid.nodes_per_dim = static_cast<int>(parse_long(value, key));
    } else if (key == "lan_halfwidth") {
      cfg.lan_halfwidth = parse_double(value, key);
    } else if (key == "lan_points") {
      cfg.lan_points = static_cast<int>(parse_long(value, key));
    } else if (key == "output") {
      cfg.output_path = value;
    } else {
      throw config_error("config line " + std::to_string(line_no) +
                         ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

CellResult run_cell(const ExperimentConfig& cfg, int n, double alpha,
                    std::uint64_t seed) {
  const ModelSpec& model = find_model(cfg.model);
  const TrueProcess& process = find_process(cfg.process);
  const Prior& prior = find_prior(cfg.prior);
  cfg.diagnostics.validate();

  const Dataset data = sample_data(process, n, seed);
  const Vec theta_star = pseudo_true_for(process, model);
  const MleFit fit = fit_mle(model, data, theta_star, theta_star);

  // Posterior-facing curvature at the fit point sizes the grid; theory-facing
  // curvature at theta_star feeds the limiting Gaussian and the LAN check.
  const CurvatureEstimates curv_hat =
      estimate_curvature_robust(model, data, fit.theta_hat);
  const CurvatureEstimates curv_star =
      estimate_curvature_robust(model, data, theta_star);

  AlphaConfig grid_cfg = cfg.grid;
  grid_cfg.alpha = alpha;
  const GridDensity post =
      normalize_on_grid(model, prior, data, grid_cfg, fit, curv_hat);
  const GridDensity post_lan = to_lan_frame(post, theta_star, n);
  const LimitingGaussian lim =
      limiting_gaussian(fit, curv_star, alpha, n, Frame::h);
  const GridDensity lim_lan =
      tabulate_gaussian(post_lan.axes(), lim.mean, lim.covariance, Frame::h,
                        GridDensity::Normalize::check, post_lan.lan_meta());

  const double r = cfg.diagnostics.radius_for(n);

  CellResult result;
  DiagnosticsReport& report = result.report;
  report.n = n;
  report.alpha = alpha;
  report.seed = seed;
  report.r = r;
  report.model = cfg.model;
  report.process = cfg.process;
  report.prior = cfg.prior;

  for (int k = 1; k <= cfg.diagnostics.k0; ++k) {
    const WeightedL1 wl = weighted_l1_distance(post_lan, lim_lan, k);
    report.moments.push_back({k, wl.z0, wl.z_upper});
    if (k == cfg.diagnostics.k) {
      report.z0 = wl.z0;
      report.z_upper = wl.z_upper;
    }
  }
  report.tv = tv_distance(post_lan, lim_lan);
  const FnRatioSuprema sup = fn_ratio_suprema(post_lan, lim_lan, r);
  report.sup_fn_plus = sup.sup_plus;
  report.sup_fn_minus = sup.sup_minus;
  report.tail_mass = concentration_tail_mass(post_lan, r);
  const auto h_grid = box_grid(model.dim_p, cfg.lan_halfwidth, cfg.lan_points);
  report.sup_rn =
      lan_remainder_sup(model, data, theta_star, curv_star.V, h_grid, *fit.delta);

  PointEstimateRow& row = result.row;
  row.n = n;
  row.alpha = alpha;
  row.seed = seed;
  row.theta_bayes = grid_mean(post);
  row.theta_mle = fit.theta_hat;
  const double root_n = std::sqrt(static_cast<double>(n));
  row.gap = root_n * (row.theta_bayes - row.theta_mle);
  row.scaled_error = root_n * (row.theta_bayes - theta_star);

  result.v_tilde = curv_star.V_tilde;
  return result;
}

CellBatch run_cells(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  struct Job {
    int n;
    double alpha;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int n : cfg.n_sequence)
    for (double alpha : cfg.alpha_set)
      for (std::uint64_t seed : cfg.seeds) jobs.push_back({n, alpha, seed});

  std::vector<CellResult> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};

  const int worker_count =
      std::min<int>(resolve_threads(threads), static_cast<int>(jobs.size()));
  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      try {
        results[i] = run_cell(cfg, job.n, job.alpha, job.seed);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "cell(n=" << job.n << ", alpha=" << fmt_g17(job.alpha)
            << ", seed=" << job.seed << "): " << e.what();
        errors[i] = msg.str();
      }
    }
  };

  if (worker_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int t = 0; t < worker_count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  CellBatch batch;
  batch.total = jobs.size();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i].empty())
      batch.cells.push_back(std::move(results[i]));
    else
      batch.failures.push_back(std::move(errors[i]));
  }
  return batch;
}

void write_diagnostics_csv(std::ostream& out,
                           const std::vector<CellResult>& cells) {
  out << "model,process,prior,n,alpha,seed,k,r,z0,z_upper,tv,sup_Rn,"
         "tail_mass,sup_fn_plus,sup_fn_minus\n";
  for (const auto& cell : cells) {
    const DiagnosticsReport& rep = cell.report;
    for (const auto& moment : rep.moments) {
      out << rep.model << ',' << rep.process << ',' << rep.prior << ','
          << rep.n << ',' << fmt_g17(rep.alpha) << ',' << rep.seed << ','
          << moment.k << ',' << fmt_g17(rep.r) << ',' << fmt_g17(moment.z0)
          << ',' << fmt_g17(moment.z_upper) << ',' << fmt_g17(rep.tv) << ','
          << fmt_g17(rep.sup_rn) << ',' << fmt_g17(rep.tail_mass) << ','
          << fmt_g17(rep.sup_fn_plus) << ',' << fmt_g17(rep.sup_fn_minus)
          << '\n';
    }
  }
}

void write_point_estimates_csv(std::ostream& out,
                        const std::vector<CellResult>& cells) {
  if (cells.empty()) {
    out << "n,alpha,seed\n";
    return;
  }
  const Eigen::Index p = cells.front().row.theta_bayes.size();
  out << "n,alpha,seed";
  const auto emit_heads = [&](const char* base) {
    for (Eigen::Index j = 0; j < p; ++j) out << ',' << base << '_' << (j + 1);
  };
  emit_heads("theta_bayes");
  emit_heads("theta_mle");
  emit_heads("gap");
  emit_heads("scaled_error");
  out << '\n';
  for (const auto& cell : cells) {
    const PointEstimateRow& row = cell.row;
    out << row.n << ',' << fmt_g17(row.alpha) << ',' << row.seed;
    const auto emit_vec = [&](const Vec& v) {
      for (Eigen::Index j = 0; j < p; ++j) out << ',' << fmt_g17(v[j]);
    };
    emit_vec(row.theta_bayes);
    emit_vec(row.theta_mle);
    emit_vec(row.gap);
    emit_vec(row.scaled_error);
    out << '\n';
  }
}

std::string summary_json(const ExperimentConfig& cfg, const CellBatch& batch) {
  nlohmann::json root;
  root["config"] = {
      {"model", cfg.model},         {"process", cfg.process},
      {"prior", cfg.prior},         {"n_sequence", cfg.n_sequence},
      {"alphas", cfg.alpha_set},    {"seed_count", cfg.seeds.size()},
      {"k", cfg.diagnostics.k},     {"k0", cfg.diagnostics.k0},
      {"gamma", cfg.diagnostics.gamma},
      {"eta", cfg.diagnostics.eta}, {"epsilon", cfg.diagnostics.epsilon},
  };
  root["cells"] = {{"total", batch.total},
                   {"succeeded", batch.cells.size()},
                   {"failed", batch.failures.size()}};
  root["failures"] = batch.failures;

  nlohmann::json conditions = nlohmann::json::array();
  for (int n : cfg.n_sequence) {
    for (double alpha : cfg.alpha_set) {
      std::vector<const CellResult*> group;
      for (const auto& cell : batch.cells)
        if (cell.report.n == n && cell.report.alpha == alpha)
          group.push_back(&cell);
      if (group.empty()) continue;

      const auto median_of = [&](auto&& extract) {
        std::vector<double> values;
        values.reserve(group.size());
        for (const auto* cell : group) values.push_back(extract(*cell));
        return median(std::move(values));
      };

      nlohmann::json cond;
      cond["n"] = n;
      cond["alpha"] = alpha;
      cond["cells"] = group.size();
      nlohmann::json medians;
      medians["tv"] = median_of([](const CellResult& c) { return c.report.tv; });
      medians["sup_Rn"] =
          median_of([](const CellResult& c) { return c.report.sup_rn; });
      medians["tail_mass"] =
          median_of([](const CellResult& c) { return c.report.tail_mass; });
      medians["gap_norm"] =
          median_of([](const CellResult& c) { return c.row.gap.norm(); });
      nlohmann::json z0_medians, z_upper_medians;
      for (std::size_t m = 0; m < group.front()->report.moments.size(); ++m) {
        const int k = group.front()->report.moments[m].k;
        z0_medians[std::to_string(k)] = median_of(
            [m](const CellResult& c) { return c.report.moments[m].z0; });
        z_upper_medians[std::to_string(k)] = median_of(
            [m](const CellResult& c) { return c.report.moments[m].z_upper; });
      }
      medians["z0"] = z0_medians;
      medians["z_upper"] = z_upper_medians;
      cond["median"] = medians;

      const Eigen::Index p = group.front()->row.scaled_error.size();
      Vec mean = Vec::Zero(p);
      for (const auto* cell : group) mean += cell->row.scaled_error;
      mean /= static_cast<double>(group.size());
      Mat cov = Mat::Zero(p, p);
      if (group.size() > 1) {
        for (const auto* cell : group) {
          const Vec d = cell->row.scaled_error - mean;
          cov += d * d.transpose();
        }
        cov /= static_cast<double>(group.size() - 1);
      }
      std::vector<double> mean_out(mean.data(), mean.data() + p);
      std::vector<std::vector<double>> cov_out;
      for (Eigen::Index rr = 0; rr < p; ++rr)
        cov_out.emplace_back(cov.row(rr).begin(), cov.row(rr).end());
      cond["scaled_error_mean"] = mean_out;
      cond["scaled_error_cov"] = cov_out;

      // Elementwise median of the per-cell sandwich estimates, and the
      // diagonal ratio of the empirical covariance to it.
      Mat vt_median(p, p);
      for (Eigen::Index rr = 0; rr < p; ++rr) {
        for (Eigen::Index cc = 0; cc < p; ++cc) {
          std::vector<double> values;
          values.reserve(group.size());
          for (const auto* cell : group) values.push_back(cell->v_tilde(rr, cc));
          vt_median(rr, cc) = median(std::move(values));
        }
      }
      std::vector<std::vector<double>> vt_out;
      for (Eigen::Index rr = 0; rr < p; ++rr)
        vt_out.emplace_back(vt_median.row(rr).begin(), vt_median.row(rr).end());
      cond["v_tilde_median"] = vt_out;
      std::vector<double> ratio;
      for (Eigen::Index j = 0; j < p; ++j)
        ratio.push_back(vt_median(j, j) != 0.0 ? cov(j, j) / vt_median(j, j)
                                               : 0.0);
      cond["cov_to_v_tilde_diag_ratio"] = ratio;

      conditions.push_back(std::move(cond));
    }
  }
  root["per_condition"] = std::move(conditions);
  return root.dump(2);
}

SweepResult run_sweep(const ExperimentConfig& cfg, int threads) {
  SweepResult result;
  result.batch = run_cells(cfg, threads);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_path);
  const fs::path base(cfg.output_path);

  result.diagnostics_path = (base / "diagnostics.csv").string();
  result.point_estimates_path = (base / "point_estimates.csv").string();
  result.summary_path = (base / "summary.json").string();

  std::ofstream diag(result.diagnostics_path);
  if (!diag) throw config_error("cannot write " + result.diagnostics_path);
  write_diagnostics_csv(diag, result.batch.cells);

  std::ofstream theo(result.point_estimates_path);
  if (!theo) throw config_error("cannot write " + result.point_estimates_path);
  write_point_estimates_csv(theo, result.batch.cells);

  std::ofstream summary(result.summary_path);
  if (!summary) throw config_error("cannot write " + result.summary_path);
  summary << summary_json(cfg, result.batch) << '\n';

  return result;
}

namespace {

double student_t5_log_pdf(double x, double loc, double scale) {
  const double t = (x - loc) / scale;
  // lgamma(3) - lgamma(2.5) - 0.5 log(5 pi)
  static const double log_norm = std::lgamma(3.0) - std::lgamma(2.5) -
                                 0.5 * std::log(5.0 * std::numbers::pi);
  return log_norm - std::log(scale) - 3.0 * std::log1p(t * t / 5.0);
}

}  // namespace

InequalitySweep check_inequalities(int instances, std::uint64_t seed) {
  if (instances < 1) throw config_error("check_inequalities: instances must be >= 1");
  InequalitySweep sweep;
  sweep.instances = instances;

  const auto record = [&sweep](int& counter, const std::string& what) {
    ++counter;
    if (sweep.messages.size() < 32) sweep.messages.push_back(what);
  };

  for (int i = 0; i < instances; ++i) {
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1)));
    const int p = (i % 5 == 4) ? 2 : 1;
    const bool use_student = p == 1 && (i % 3 == 2);

    Vec mu_a(p), mu_b(p), sd_a(p), sd_b(p);
    for (int d = 0; d < p; ++d) {
      mu_a[d] = rng.uniform(-1.0, 1.0);
      mu_b[d] = rng.uniform(-1.0, 1.0);
      sd_a[d] = rng.uniform(0.6, 1.8);
      sd_b[d] = rng.uniform(0.6, 1.8);
    }
    double reach = 0.0;
    for (int d = 0; d < p; ++d)
      reach = std::max({reach, std::abs(mu_a[d]) + 12.0 * sd_a[d],
                        std::abs(mu_b[d]) + 12.0 * sd_b[d]});
    const int nodes = p == 1 ? 3001 : 161;
    std::vector<std::vector<double>> axes(
        static_cast<std::size_t>(p), linspace(-reach, reach, nodes));

    const auto gaussian_pdf = [](const Vec& mu, const Vec& sd) {
      return [mu, sd](const Vec& u) {
        double total = 0.0;
        for (Eigen::Index d = 0; d < u.size(); ++d) {
          const double z = (u[d] - mu[d]) / sd[d];
          total += -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd[d]) -
                   0.5 * z * z;
        }
        return total;
      };
    };

    const GridDensity phi =
        GridDensity::tabulate(axes, gaussian_pdf(mu_a, sd_a), Frame::h,
                              GridDensity::Normalize::renormalize,
                              LanMeta{Vec::Zero(p), 1.0});
    const GridDensity psi =
        use_student
            ? GridDensity::tabulate(
                  axes,
                  [&](const Vec& u) {
                    return student_t5_log_pdf(u[0], mu_b[0], sd_b[0]);
                  },
                  Frame::h, GridDensity::Normalize::renormalize,
                  LanMeta{Vec::Zero(p), 1.0})
            : GridDensity::tabulate(axes, gaussian_pdf(mu_b, sd_b), Frame::h,
                                    GridDensity::Normalize::renormalize,
                                    LanMeta{Vec::Zero(p), 1.0});

    const int k = 1 + (i % 2);
    const double gamma = rng.uniform(0.5, 2.0);
    const double r = rng.uniform(1.0, 4.0);
    const double K_radius = rng.uniform(3.0, 8.0);
    const int markov_order = (i % 3 == 0) ? 1 : (i % 3 == 1 ? 2 : 4);

    const auto label = [&](const char* what) {
      std::ostringstream msg;
      msg << what << " violated at instance " << i << " (p=" << p
          << ", k=" << k << ", gamma=" << gamma << ", r=" << r
          << ", K=" << K_radius << ")";
      return msg.str();
    };

    const WeightedL1 wl = weighted_l1_distance(phi, psi, k);
    if (!(wl.z0 <= wl.z_upper * (1.0 + 1e-12) + 1e-15))
      record(sweep.z0_bound_violations, label("z0 <= z_upper"));

    for (const GridDensity* g : {&phi, &psi}) {
      for (double rr : {0.5 * r, r, 2.0 * r}) {
        const double tail = concentration_tail_mass(*g, rr);
        const double bound =
            std::pow(rr, -markov_order) * grid_abs_moment(*g, markov_order);
        if (!(tail <= bound * (1.0 + 1e-12) + 1e-15))
          record(sweep.markov_violations, label("Markov concentration bound"));
      }
    }

    const BoundCheck l1 = moment_ratio_bound_check(phi, psi, k, K_radius);
    if (!l1.holds())
      record(sweep.moment_ratio_violations, label("moment/likelihood-ratio bound"));

    for (const GridDensity* g : {&phi, &psi}) {
      const BoundCheck l2 = tail_moment_bound(*g, k, gamma, r);
      if (!l2.holds())
        record(sweep.tail_moment_violations, label("tail-moment bound"));
    }

    const FnRatioSuprema forward = fn_ratio_suprema(psi, phi, K_radius);
    const FnRatioSuprema swapped = fn_ratio_suprema(phi, psi, K_radius);
    if (std::abs(forward.sup_minus - swapped.sup_plus) > 1e-12 ||
        std::abs(forward.sup_plus - forward.sup_minus) > 1e-12)
      record(sweep.symmetry_violations, label("f-/f+ swap identity"));
  }
  return sweep;
}

}  // namespace powerpost
