#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "powerpost/asymptotics.hpp"
#include "powerpost/grid_density.hpp"
#include "powerpost/model.hpp"

namespace powerpost {

struct DiagnosticsConfig {
  int k = 1;             // moment order under test, 1 <= k <= k0
  int k0 = 2;            // maximal moment order
  double gamma = 1.0;    // tail exponent
  double r = 0.0;        // concentration radius; <= 0 selects n^(1/8)
  double eta = 0.1;      // ratio-event threshold
  double epsilon = 0.05; // informational target bound for summaries

  void validate() const;
  double radius_for(int n) const;
};

struct MomentDistance {
  int k = 1;
  double z0 = 0.0;
  double z_upper = 0.0;
};

struct DiagnosticsReport {
  double z0 = 0.0;       // weighted-L1 distance at the configured k
  double z_upper = 0.0;  // its p^(k/2) ||h||_2^k upper bound
  double tv = 0.0;
  double sup_rn = 0.0;
  double tail_mass = 0.0;
  double sup_fn_plus = 0.0;
  double sup_fn_minus = 0.0;
  std::vector<MomentDistance> moments;  // one entry per k = 1..k0

  int n = 0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  double r = 0.0;
  std::string model, process, prior;
};

// ||h^(x k)||_1 = ||h||_1^k (the entrywise 1-norm of the k-th tensor power).
double tensor_norm_1(const Vec& h, int k);

struct WeightedL1 {
  double z0 = 0.0;
  double z_upper = 0.0;
};

// z0 = integral of ||h||_1^k |a - b|; z_upper = p^(k/2) integral of
// ||h||_2^k |a - b|. Always z0 <= z_upper.
WeightedL1 weighted_l1_distance(const GridDensity& a, const GridDensity& b,
                                int k);

// Half the L1 distance between the tabulated densities; in [0, 1].
double tv_distance(const GridDensity& a, const GridDensity& b);

// Supremum over the h grid of |R_n(h)| where
// R_n(h) = log(f_n(theta* + h/sqrt(n)) / f_n(theta*)) - h'V delta + h'V h / 2.
// The overload without `delta` obtains it from an internal MLE fit.
double lan_remainder_sup(const ModelSpec& model, const Dataset& data,
                         const Vec& theta_star, const Mat& V,
                         const std::vector<Vec>& h_grid, const Vec& delta);
double lan_remainder_sup(const ModelSpec& model, const Dataset& data,
                         const Vec& theta_star, const Mat& V,
                         const std::vector<Vec>& h_grid);

// Mass outside the centered ball of radius r (node-masked trapezoid rule).
double concentration_tail_mass(const GridDensity& g, double r);

struct FnRatioSuprema {
  double sup_plus = 0.0;
  double sup_minus = 0.0;
  std::size_t ball_nodes = 0;
};

// Suprema over grid-node pairs (g, h) inside the centered ball of radius r of
//   f+(g,h) = max(0, 1 - lim(h) post(g) / (post(h) lim(g)))
//   f-(g,h) = max(0, 1 - post(h) lim(g) / (lim(h) post(g)))
// computed in log space. The two suprema agree identically (swapping the pair
// maps one functional onto the other); a 1e-12 disagreement is reported as an
// internal consistency error.
FnRatioSuprema fn_ratio_suprema(const GridDensity& post, const GridDensity& lim,
                                double r);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs * (1.0 + 1e-12) + 1e-15; }
};

// Moment/likelihood-ratio bound with weight s(h) = ||h||_2^k on the ball of
// radius K_radius:
//   lhs = integral s |phi - psi|
//   rhs = sup f+ . integral s psi + sup f- . integral s phi + tail integral.
BoundCheck moment_ratio_bound_check(const GridDensity& phi, const GridDensity& psi,
                              int k, double K_radius);

// Tail-moment bound: lhs = E[||Z||^k 1{||Z|| > r}],
// rhs = (gamma+1)/(gamma r^gamma) E[||Z||^(k(1+gamma))].
BoundCheck tail_moment_bound(const GridDensity& g, int k, double gamma,
                             double r);
BoundCheck tail_moment_bound(const std::vector<double>& sample_norms, int k,
                             double gamma, double r);

// Product grid of points spanning [-halfwidth, halfwidth]^p.
std::vector<Vec> box_grid(int p, double halfwidth, int points_per_dim);

}  // namespace powerpost
