#pragma once

#include <optional>
#include <string>

#include "powerpost/grid_density.hpp"
#include "powerpost/model.hpp"
#include "powerpost/types.hpp"

namespace powerpost {

struct MleFit {
  Vec theta_hat;
  double log_lik_at_max = 0.0;
  // sqrt(n) * (theta_hat - theta_star), filled when theta_star was supplied.
  std::optional<Vec> delta;
  bool converged = false;
  int iterations = 0;
};

enum class CurvatureMethod { analytic, finite_difference };

// V: per-observation curvature -(1/n) d^2 log f_n; M: empirical score outer
// product (1/n) sum s_i s_i^T; V_tilde = V^-1 M V^-1 (sandwich).
struct CurvatureEstimates {
  Mat V;
  Mat M;
  Mat V_tilde;
  Vec estimated_at;
  CurvatureMethod method = CurvatureMethod::finite_difference;
};

// Safeguarded Newton ascent with a finite-difference Hessian and backtracking;
// golden-section fallback for p = 1. Five jittered starts must agree to 1e-6
// or a nonuniqueness_error is thrown; non-convergence within 200 iterations
// (or an optimum drifting to the box boundary) throws convergence_error.
MleFit fit_mle(const ModelSpec& model, const Dataset& data, const Vec& start,
               const std::optional<Vec>& theta_star = std::nullopt);

// Curvature and sandwich estimates at `at`. The Hessian always uses central
// finite differences with step `hessian_step * max(1, |theta_j|)`; the method
// tag records whether the scores came from the model or from differences.
CurvatureEstimates estimate_curvature(const ModelSpec& model,
                                      const Dataset& data, const Vec& at,
                                      double hessian_step = 1e-4);

// estimate_curvature with one retry at a coarser step: a kinked log-likelihood
// (Laplace location) can present a zero second difference at step 1e-4, so the
// retry widens the step to max(1e-2, n^-1/2) to average over kinks.
CurvatureEstimates estimate_curvature_robust(const ModelSpec& model,
                                             const Dataset& data,
                                             const Vec& at);

struct LimitingGaussian {
  Vec mean;
  Mat covariance;
  Frame frame = Frame::theta;
};

// The normal limit of the alpha-posterior: mean theta_hat with covariance
// V^-1/(alpha n) in the theta frame, or mean delta with covariance V^-1/alpha
// in the h frame (requires fit.delta).
LimitingGaussian limiting_gaussian(const MleFit& fit,
                                   const CurvatureEstimates& curv, double alpha,
                                   double n, Frame frame);

// Closed-form bound on the k-th absolute moment of the limiting Gaussian:
// (2^(3k/2-1) p^(k/2-1) / sqrt(pi)) Gamma((k+1)/2) sum_i (v_inv_diag_i/alpha)^(k/2).
double gaussian_abs_moment(const Vec& v_inv_diag, int k, double alpha);

// Theta-space moment distance: integral of n^(k/2) ||theta - theta_star||_1^k
// |post - limit| d theta, k in {1, 2}; equals the h-frame weighted-L1 distance
// after the change of variables.
double tensor_moment_distance_corollary(const GridDensity& post_theta,
                                        const GridDensity& limit_theta,
                                        const Vec& theta_star, int k, double n);
double tensor_moment_distance_corollary(const GridDensity& post_theta,
                                        const LimitingGaussian& limit,
                                        const Vec& theta_star, int k, double n);

std::string curvature_to_json(const CurvatureEstimates& curv);

}  // namespace powerpost
