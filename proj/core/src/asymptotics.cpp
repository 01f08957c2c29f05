#include "powerpost/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "powerpost/errors.hpp"
#include "powerpost/numeric.hpp"
#include "powerpost/rng.hpp"

namespace powerpost {

namespace {

struct SolveResult {
  Vec theta;
  double log_lik = 0.0;
  int iterations = 0;
  bool converged = false;
  bool via_golden = false;
};

Vec clamp_inside(const ModelSpec& model, Vec theta) {
  for (int j = 0; j < model.dim_p; ++j) {
    const auto& box = model.theta_box[static_cast<std::size_t>(j)];
    const double margin = 1e-9 * (box.hi - box.lo);
    theta[j] = std::clamp(theta[j], box.lo + margin, box.hi - margin);
  }
  return theta;
}

Vec total_score(const ModelSpec& model, const Dataset& data, const Vec& theta) {
  std::vector<KahanSum> sums(static_cast<std::size_t>(model.dim_p));
  for (const auto& obs : data) {
    const Vec s = model.score(obs, theta);
    for (int j = 0; j < model.dim_p; ++j) sums[static_cast<std::size_t>(j)].add(s[j]);
  }
  Vec g(model.dim_p);
  for (int j = 0; j < model.dim_p; ++j) g[j] = sums[static_cast<std::size_t>(j)].value();
  return g;
}

SolveResult newton_ascent(const ModelSpec& model, const Dataset& data,
                          const Vec& start) {
  const auto objective = [&](const Vec& theta) {
    return log_likelihood(model, theta, data);
  };

  SolveResult res;
  res.theta = clamp_inside(model, start);
  constexpr int kMaxIter = 200;
  int stalled = 0;
  for (int iter = 1; iter <= kMaxIter; ++iter) {
    res.iterations = iter;
    const double ll = objective(res.theta);
    const Vec grad = total_score(model, data, res.theta);
    const double scale = std::max(1.0, std::abs(ll));
    if (grad.norm() <= 1e-11 * scale) {
      res.log_lik = ll;
      res.converged = true;
      return res;
    }

    Mat hess;
    try {
      hess = fd_hessian(objective, res.theta, 1e-4);
    } catch (const std::domain_error&) {
      break;  // probe left the box: the iterate is glued to the boundary
    }
    Vec direction;
    Eigen::LLT<Mat> llt(Mat(-hess));
    if (llt.info() == Eigen::Success) {
      direction = llt.solve(grad);
    } else {
      direction = grad / std::max(1.0, grad.norm());
    }

    // Near a nondegenerate optimum the Newton step is contracting but its
    // objective gain sits below the rounding floor of the total
    // log-likelihood, so a line search cannot see it. Take it as is.
    if (llt.info() == Eigen::Success &&
        direction.norm() <= 1e-6 * std::max(1.0, res.theta.norm())) {
      const Vec candidate = res.theta + direction;
      if (model.inside_box(candidate)) {
        const double step_norm = direction.norm();
        res.theta = candidate;
        if (step_norm <= 1e-10 * std::max(1.0, res.theta.norm()) &&
            grad.norm() <= 1e-6 * scale) {
          res.log_lik = objective(res.theta);
          res.converged = true;
          return res;
        }
        continue;
      }
    }

    double step = 1.0;
    const double slope = grad.dot(direction);
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec candidate = res.theta + step * direction;
      if (model.inside_box(candidate)) {
        const double cand_ll = objective(candidate);
        if (cand_ll > ll + 1e-4 * step * slope) {
          const double step_norm = (candidate - res.theta).norm();
          res.theta = candidate;
          moved = true;
          if (step_norm <= 1e-10 * std::max(1.0, res.theta.norm())) {
            if (grad.norm() <= 1e-6 * scale) {
              res.log_lik = cand_ll;
              res.converged = true;
              return res;
            }
            ++stalled;
          } else {
            stalled = 0;
          }
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) {
      // No admissible ascent step left; a tiny gradient means we are at the
      // finite-difference noise floor of the optimum.
      res.log_lik = ll;
      res.converged = grad.norm() <= 1e-6 * scale;
      return res;
    }
    if (stalled >= 3) break;  // vanishing steps with a live gradient (kinks)
  }
  res.log_lik = objective(res.theta);
  res.converged = false;
  return res;
}

SolveResult golden_fallback(const ModelSpec& model, const Dataset& data) {
  const auto& box = model.theta_box[0];
  const double margin = 1e-9 * (box.hi - box.lo);
  const double lo = box.lo + margin;
  const double hi = box.hi - margin;
  const auto objective = [&](double t) {
    Vec theta(1);
    theta[0] = t;
    return log_likelihood(model, theta, data);
  };
  SolveResult res;
  res.theta = Vec(1);
  res.theta[0] = golden_section_max(objective, lo, hi, 1e-10 * (hi - lo), 400);
  res.log_lik = objective(res.theta[0]);
  res.iterations = 200;
  res.via_golden = true;

  // An optimum glued to the box edge, or a plateau extending to the edge,
  // means the MLE escapes to infinity.
  const double width = hi - lo;
  const double drop = 1e-7 * std::max(1.0, std::abs(res.log_lik));
  if (res.theta[0] - lo < 1e-6 * width || hi - res.theta[0] < 1e-6 * width ||
      objective(lo) >= res.log_lik - drop || objective(hi) >= res.log_lik - drop)
    throw convergence_error(
        "fit_mle: log-likelihood keeps increasing toward the boundary of the "
        "parameter box; no interior MLE for model '" + model.name + "'");

  // Non-smooth likelihoods (kinks at data points) have no vanishing gradient
  // at the optimum; certify local maximality directly instead.
  for (double delta : {1e-6 * width, 1e-4 * width}) {
    if (objective(std::max(lo, res.theta[0] - delta)) > res.log_lik ||
        objective(std::min(hi, res.theta[0] + delta)) > res.log_lik)
      throw convergence_error(
          "fit_mle: golden-section result is not a local maximum for model '" +
          model.name + "'");
  }
  res.converged = true;
  return res;
}

}  // namespace

MleFit fit_mle(const ModelSpec& model, const Dataset& data, const Vec& start,
               const std::optional<Vec>& theta_star) {
  if (data.empty()) throw std::invalid_argument("fit_mle: empty dataset");
  if (!model.inside_box(clamp_inside(model, start)))
    throw std::domain_error("fit_mle: start outside the parameter box");

  // Five deterministic jittered starts guard against non-unique optima.
  constexpr int kStarts = 5;
  Rng jitter_rng(0x00715eedULL);
  std::vector<Vec> starts;
  starts.push_back(clamp_inside(model, start));
  for (int i = 1; i < kStarts; ++i) {
    Vec s = start;
    for (int j = 0; j < model.dim_p; ++j)
      s[j] += jitter_rng.uniform(-0.5, 0.5) * std::max(1.0, std::abs(start[j]));
    starts.push_back(clamp_inside(model, s));
  }

  std::vector<SolveResult> results;
  int total_iterations = 0;
  for (const auto& s : starts) {
    SolveResult r = newton_ascent(model, data, s);
    if (!r.converged) {
      if (model.dim_p == 1) {
        r = golden_fallback(model, data);
      } else {
        throw convergence_error(
            "fit_mle: Newton ascent did not converge within 200 iterations "
            "for model '" + model.name + "'");
      }
    }
    total_iterations += r.iterations;
    results.push_back(std::move(r));
  }

  for (std::size_t a = 0; a < results.size(); ++a) {
    for (std::size_t b = a + 1; b < results.size(); ++b) {
      const double gap =
          (results[a].theta - results[b].theta).lpNorm<Eigen::Infinity>();
      if (gap > 1e-6) {
        std::ostringstream msg;
        msg << "fit_mle: multi-start optima disagree by " << gap
            << " (non-unique MLE?) for model '" << model.name << "'";
        throw nonuniqueness_error(msg.str());
      }
    }
  }

  const auto best = std::max_element(
      results.begin(), results.end(),
      [](const SolveResult& a, const SolveResult& b) { return a.log_lik < b.log_lik; });

  MleFit fit;
  fit.theta_hat = best->theta;
  fit.log_lik_at_max = best->log_lik;
  fit.converged = true;
  fit.iterations = total_iterations;

  // The golden path certifies optimality by direct comparison; the gradient
  // invariant only makes sense where the likelihood is differentiable.
  if (!best->via_golden) {
    const Vec grad = total_score(model, data, fit.theta_hat);
    if (grad.norm() >= 1e-6 * std::max(1.0, std::abs(fit.log_lik_at_max)))
      throw convergence_error(
          "fit_mle: gradient at the reported optimum is not numerically zero");
  }
  if (!model.inside_box(fit.theta_hat))
    throw convergence_error("fit_mle: optimum not strictly inside the box");
  // An optimum pinned to the box boundary means the likelihood keeps rising
  // toward the edge of Theta (e.g. separable logistic data).
  for (int j = 0; j < model.dim_p; ++j) {
    const auto& box = model.theta_box[static_cast<std::size_t>(j)];
    const double width = box.hi - box.lo;
    if (fit.theta_hat[j] - box.lo < 1e-4 * width ||
        box.hi - fit.theta_hat[j] < 1e-4 * width)
      throw convergence_error(
          "fit_mle: optimum pinned to the parameter box boundary; the MLE "
          "appears to escape to infinity for model '" + model.name + "'");
  }

  if (theta_star) {
    const double root_n = std::sqrt(static_cast<double>(data.size()));
    fit.delta = root_n * (fit.theta_hat - *theta_star);
  }
  return fit;
}

CurvatureEstimates estimate_curvature(const ModelSpec& model,
                                      const Dataset& data, const Vec& at,
                                      double hessian_step) {
  model.require_inside(at);
  if (data.empty()) throw std::invalid_argument("estimate_curvature: empty dataset");
  const double n = static_cast<double>(data.size());

  const auto objective = [&](const Vec& theta) {
    return log_likelihood(model, theta, data);
  };
  Mat v = -fd_hessian(objective, at, hessian_step) / n;
  v = 0.5 * (v + v.transpose());

  Mat m = Mat::Zero(model.dim_p, model.dim_p);
  for (const auto& obs : data) {
    const Vec s = model.score(obs, at);
    m += s * s.transpose();
  }
  m /= n;
  m = 0.5 * (m + m.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> eig(v);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    std::ostringstream msg;
    msg << "estimate_curvature: V is not positive definite at "
        << at.transpose() << " (min eigenvalue "
        << (eig.info() == Eigen::Success ? eig.eigenvalues().minCoeff() : 0.0)
        << ")";
    throw numerical_error(msg.str());
  }

  const Mat v_inv = v.llt().solve(Mat::Identity(model.dim_p, model.dim_p));
  Mat v_tilde = v_inv * m * v_inv;
  v_tilde = 0.5 * (v_tilde + v_tilde.transpose());

  CurvatureEstimates curv;
  curv.V = std::move(v);
  curv.M = std::move(m);
  curv.V_tilde = std::move(v_tilde);
  curv.estimated_at = at;
  curv.method = model.score_one ? CurvatureMethod::analytic
                                : CurvatureMethod::finite_difference;
  return curv;
}

CurvatureEstimates estimate_curvature_robust(const ModelSpec& model,
                                             const Dataset& data,
                                             const Vec& at) {
  const double coarse_step =
      std::max(1e-2, 1.0 / std::sqrt(static_cast<double>(data.size())));
  std::optional<CurvatureEstimates> fine;
  try {
    fine = estimate_curvature(model, data, at);
  } catch (const numerical_error&) {
    return estimate_curvature(model, data, at, coarse_step);
  }
  // A kink inside the narrow probe window inflates the second difference by
  // O(1/step) while staying positive definite. The coarse window averages
  // over kinks; wild disagreement on the diagonal flags a non-smooth
  // likelihood, where the coarse estimate is the meaningful one.
  std::optional<CurvatureEstimates> coarse;
  try {
    coarse = estimate_curvature(model, data, at, coarse_step);
  } catch (const numerical_error&) {
    return *fine;
  }
  for (Eigen::Index j = 0; j < fine->V.rows(); ++j) {
    const double f = fine->V(j, j);
    const double c = coarse->V(j, j);
    if (f > 3.0 * c || f < c / 3.0) return *coarse;
  }
  return *fine;
}

LimitingGaussian limiting_gaussian(const MleFit& fit,
                                   const CurvatureEstimates& curv, double alpha,
                                   double n, Frame frame) {
  if (!(alpha > 0.0)) throw std::invalid_argument("limiting_gaussian: alpha <= 0");
  if (!(n >= 1.0)) throw std::invalid_argument("limiting_gaussian: n < 1");
  const Eigen::Index p = fit.theta_hat.size();
  const Mat v_inv = curv.V.llt().solve(Mat::Identity(p, p));

  LimitingGaussian lim;
  lim.frame = frame;
  if (frame == Frame::theta) {
    lim.mean = fit.theta_hat;
    lim.covariance = v_inv / (alpha * n);
  } else {
    if (!fit.delta)
      throw std::invalid_argument(
          "limiting_gaussian: h frame requires fit.delta (pass theta_star to "
          "fit_mle)");
    lim.mean = *fit.delta;
    lim.covariance = v_inv / alpha;
  }
  lim.covariance = 0.5 * (lim.covariance + lim.covariance.transpose());
  return lim;
}

double gaussian_abs_moment(const Vec& v_inv_diag, int k, double alpha) {
  if (k < 1) throw std::invalid_argument("gaussian_abs_moment: k must be >= 1");
  if (!(alpha > 0.0))
    throw std::invalid_argument("gaussian_abs_moment: alpha must be positive");
  const double p = static_cast<double>(v_inv_diag.size());
  const double kd = static_cast<double>(k);
  const double prefactor = std::pow(2.0, 1.5 * kd - 1.0) *
                           std::pow(p, 0.5 * kd - 1.0) /
                           std::sqrt(std::numbers::pi) *
                           std::tgamma(0.5 * (kd + 1.0));
  double sum = 0.0;
  for (Eigen::Index j = 0; j < v_inv_diag.size(); ++j)
    sum += std::pow(v_inv_diag[j] / alpha, 0.5 * kd);
  return prefactor * sum;
}

double tensor_moment_distance_corollary(const GridDensity& post_theta,
                                        const GridDensity& limit_theta,
                                        const Vec& theta_star, int k, double n) {
  if (k != 1 && k != 2)
    throw std::invalid_argument("tensor_moment_distance_corollary: k must be 1 or 2");
  if (post_theta.frame() != Frame::theta || limit_theta.frame() != Frame::theta)
    throw std::invalid_argument(
        "tensor_moment_distance_corollary: both densities must be in the theta frame");
  require_same_axes(post_theta, limit_theta);

  const double n_factor = std::pow(n, 0.5 * k);
  KahanSum sum;
  post_theta.for_each_node([&](std::size_t flat, const Vec& theta, double w) {
    // ||(theta - theta_star)^(x k)||_1 collapses to the l1 norm to the k-th power.
    const double l1 = (theta - theta_star).lpNorm<1>();
    const double gap = std::abs(post_theta.density(flat) - limit_theta.density(flat));
    sum.add(w * n_factor * std::pow(l1, k) * gap);
  });
  return sum.value();
}

double tensor_moment_distance_corollary(const GridDensity& post_theta,
                                        const LimitingGaussian& limit,
                                        const Vec& theta_star, int k, double n) {
  if (limit.frame != Frame::theta)
    throw std::invalid_argument(
        "tensor_moment_distance_corollary: limiting Gaussian must be in the theta frame");
  const GridDensity limit_grid =
      tabulate_gaussian(post_theta.axes(), limit.mean, limit.covariance,
                        Frame::theta, GridDensity::Normalize::check);
  return tensor_moment_distance_corollary(post_theta, limit_grid, theta_star, k, n);
}

std::string curvature_to_json(const CurvatureEstimates& curv) {
  nlohmann::json j;
  const auto matrix_rows = [](const Mat& m) {
    std::vector<double> rows;
    rows.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) rows.push_back(m(r, c));
    return rows;
  };
  j["dim"] = curv.V.rows();
  j["V"] = matrix_rows(curv.V);
  j["M"] = matrix_rows(curv.M);
  j["V_tilde"] = matrix_rows(curv.V_tilde);
  j["estimated_at"] =
      std::vector<double>(curv.estimated_at.data(),
                          curv.estimated_at.data() + curv.estimated_at.size());
  j["method"] = curv.method == CurvatureMethod::analytic ? "analytic"
                                                         : "finite_difference";
  return j.dump(2);
}

}  // namespace powerpost
