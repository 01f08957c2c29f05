#pragma once

#include <cstdint>
#include <vector>

#include "powerpost/asymptotics.hpp"
#include "powerpost/grid_density.hpp"
#include "powerpost/model.hpp"

namespace powerpost {

struct AlphaConfig {
  double alpha = 1.0;
  // The grid spans this many limiting standard errors around the MLE; the
  // Gaussian mass beyond 12 sigma is ~1e-32, far below every tolerance here.
  double grid_halfwidth_se = 12.0;
  // 0 selects the default: 4001 nodes for p = 1, 301 for p >= 2. Must be odd
  // so the center is a node.
  int nodes_per_dim = 0;

  int nodes_for(int p) const;
  void validate(int p) const;
};

// alpha * log f_n(X^n | theta) + log pi(theta).
double log_unnormalized_posterior(const ModelSpec& model, const Prior& prior,
                                  const Dataset& data, const AlphaConfig& cfg,
                                  const Vec& theta);

// Tabulates the alpha-posterior on a grid centered at the MLE with halfwidth
// grid_halfwidth_se * sqrt(V^-1_jj / (alpha n)) per coordinate, normalized by
// log-sum-exp. Throws grid_error when more than 1e-6 of the mass sits on the
// outermost grid cells.
GridDensity normalize_on_grid(const ModelSpec& model, const Prior& prior,
                              const Dataset& data, const AlphaConfig& cfg,
                              const MleFit& fit, const CurvatureEstimates& curv);

// Convenience overload that fits the MLE and curvature itself (coarsening the
// Hessian step once if the 1e-4 step fails on a non-smooth likelihood).
GridDensity normalize_on_grid(const ModelSpec& model, const Prior& prior,
                              const Dataset& data, const AlphaConfig& cfg);

// Random-walk Metropolis targeting the alpha-posterior; the proposal scale is
// adapted over a discarded 20% burn-in toward acceptance in [0.2, 0.5].
// Deterministic per seed. Throws mixing_error when the post-adaptation
// acceptance rate leaves [0.05, 0.95]; requires chain_length >= 10'000.
std::vector<Vec> sample_posterior(const ModelSpec& model, const Prior& prior,
                                  const Dataset& data, const AlphaConfig& cfg,
                                  int chain_length, std::uint64_t seed);

}  // namespace powerpost
