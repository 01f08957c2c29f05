#include "powerpost/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "powerpost/errors.hpp"
#include "powerpost/numeric.hpp"
#include "powerpost/rng.hpp"

namespace powerpost {

int AlphaConfig::nodes_for(int p) const {
  if (nodes_per_dim > 0) return nodes_per_dim;
  return p == 1 ? 4001 : 301;
}

void AlphaConfig::validate(int p) const {
  if (!(alpha > 0.0)) throw config_error("AlphaConfig: alpha must be positive");
  if (!(grid_halfwidth_se > 0.0))
    throw config_error("AlphaConfig: grid_halfwidth_se must be positive");
  const int nodes = nodes_for(p);
  if (nodes < 3 || nodes % 2 == 0)
    throw config_error("AlphaConfig: nodes_per_dim must be odd and >= 3");
}

double log_unnormalized_posterior(const ModelSpec& model, const Prior& prior,
                                  const Dataset& data, const AlphaConfig& cfg,
                                  const Vec& theta) {
  cfg.validate(model.dim_p);
  return cfg.alpha * log_likelihood(model, theta, data) +
         prior.log_density(theta);
}

GridDensity normalize_on_grid(const ModelSpec& model, const Prior& prior,
                              const Dataset& data, const AlphaConfig& cfg,
                              const MleFit& fit,
                              const CurvatureEstimates& curv) {
  const int p = model.dim_p;
  cfg.validate(p);
  if (data.empty()) throw std::invalid_argument("normalize_on_grid: empty dataset");
  const double n = static_cast<double>(data.size());

  const Mat v_inv = curv.V.llt().solve(Mat::Identity(p, p));
  std::vector<std::vector<double>> axes;
  axes.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    const double halfwidth =
        cfg.grid_halfwidth_se * std::sqrt(v_inv(j, j) / (cfg.alpha * n));
    const auto& box = model.theta_box[static_cast<std::size_t>(j)];
    const double margin = 1e-9 * (box.hi - box.lo);
    const double lo = std::max(fit.theta_hat[j] - halfwidth, box.lo + margin);
    const double hi = std::min(fit.theta_hat[j] + halfwidth, box.hi - margin);
    axes.push_back(linspace(lo, hi, cfg.nodes_for(p)));
  }

  GridDensity posterior = GridDensity::tabulate(
      axes,
      [&](const Vec& theta) {
        KahanSum ll;
        for (const auto& obs : data) ll.add(model.log_density_one(obs, theta));
        const double value = cfg.alpha * ll.value() + prior.log_density(theta);
        if (!std::isfinite(value)) {
          std::ostringstream msg;
          msg << "normalize_on_grid: non-finite log posterior at theta "
              << theta.transpose();
          throw grid_error(msg.str());
        }
        return value;
      },
      Frame::theta, GridDensity::Normalize::renormalize);

  // Mass on the outermost cells (two node layers per face) signals that the
  // grid window missed the posterior bulk.
  KahanSum edge_mass;
  posterior.for_each_node([&](std::size_t flat, const Vec& theta, double w) {
    for (int j = 0; j < p; ++j) {
      const auto& axis = posterior.axes()[static_cast<std::size_t>(j)];
      if (theta[j] <= axis[1] || theta[j] >= axis[axis.size() - 2]) {
        edge_mass.add(w * posterior.density(flat));
        break;
      }
    }
  });
  if (edge_mass.value() > 1e-6) {
    std::ostringstream msg;
    msg << "normalize_on_grid: grid too narrow, boundary mass "
        << edge_mass.value()
        << " exceeds 1e-6; widen grid_halfwidth_se or recheck the prior";
    throw grid_error(msg.str());
  }
  return posterior;
}

namespace {

Vec box_midpoint(const ModelSpec& model) {
  Vec mid(model.dim_p);
  for (int j = 0; j < model.dim_p; ++j) {
    const auto& box = model.theta_box[static_cast<std::size_t>(j)];
    mid[j] = 0.5 * (box.lo + box.hi);
  }
  return mid;
}

}  // namespace

GridDensity normalize_on_grid(const ModelSpec& model, const Prior& prior,
                              const Dataset& data, const AlphaConfig& cfg) {
  const MleFit fit = fit_mle(model, data, box_midpoint(model));
  const CurvatureEstimates curv =
      estimate_curvature_robust(model, data, fit.theta_hat);
  return normalize_on_grid(model, prior, data, cfg, fit, curv);
}

std::vector<Vec> sample_posterior(const ModelSpec& model, const Prior& prior,
                                  const Dataset& data, const AlphaConfig& cfg,
                                  int chain_length, std::uint64_t seed) {
  cfg.validate(model.dim_p);
  if (chain_length < 10'000)
    throw std::invalid_argument("sample_posterior: chain_length must be >= 10000");
  const int p = model.dim_p;
  const double n = static_cast<double>(data.size());

  const auto log_target = [&](const Vec& theta) {
    if (!model.inside_box(theta)) return -std::numeric_limits<double>::infinity();
    KahanSum ll;
    for (const auto& obs : data) ll.add(model.log_density_one(obs, theta));
    return cfg.alpha * ll.value() + prior.log_density(theta);
  };

  Vec current = box_midpoint(model);
  Vec scale = Vec::Constant(p, 1.0);
  try {
    const MleFit fit = fit_mle(model, data, current);
    current = fit.theta_hat;
    const CurvatureEstimates curv =
        estimate_curvature_robust(model, data, fit.theta_hat);
    const Mat v_inv = curv.V.llt().solve(Mat::Identity(p, p));
    for (int j = 0; j < p; ++j)
      scale[j] = 2.4 * std::sqrt(v_inv(j, j) / (cfg.alpha * n));
  } catch (const numerical_error&) {
    // Flat or degenerate targets: let burn-in adaptation find a scale.
  }

  Rng rng(seed);
  double current_lp = log_target(current);
  const int burn = chain_length / 5;

  const auto metropolis_step = [&](Vec& theta, double& lp) {
    Vec proposal = theta;
    for (int j = 0; j < p; ++j) proposal[j] += scale[j] * rng.normal();
    const double prop_lp = log_target(proposal);
    const bool accept = std::log(rng.uniform()) < prop_lp - lp;
    if (accept) {
      theta = proposal;
      lp = prop_lp;
    }
    return accept;
  };

  // Burn-in with block adaptation toward acceptance in [0.2, 0.5].
  constexpr int kBlock = 50;
  int block_accepts = 0;
  for (int step = 0; step < burn; ++step) {
    if (metropolis_step(current, current_lp)) ++block_accepts;
    if ((step + 1) % kBlock == 0) {
      const double rate = static_cast<double>(block_accepts) / kBlock;
      if (rate < 0.2)
        scale *= 0.8;
      else if (rate > 0.5)
        scale *= 1.25;
      scale = scale.cwiseMax(1e-12).cwiseMin(1e12);
      block_accepts = 0;
    }
  }

  std::vector<Vec> chain;
  chain.reserve(static_cast<std::size_t>(chain_length - burn));
  long accepts = 0;
  for (int step = burn; step < chain_length; ++step) {
    if (metropolis_step(current, current_lp)) ++accepts;
    chain.push_back(current);
  }

  const double rate = static_cast<double>(accepts) /
                      static_cast<double>(chain_length - burn);
  if (rate < 0.05 || rate > 0.95) {
    std::ostringstream msg;
    msg << "sample_posterior: acceptance rate " << rate
        << " outside [0.05, 0.95] after adaptation; chain is not mixing";
    throw mixing_error(msg.str());
  }
  return chain;
}

}  // namespace powerpost
