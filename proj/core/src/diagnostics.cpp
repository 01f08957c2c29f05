#include "powerpost/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "powerpost/errors.hpp"
#include "powerpost/numeric.hpp"

namespace powerpost {

void DiagnosticsConfig::validate() const {
  if (k < 1 || k > k0)
    throw config_error("DiagnosticsConfig: require 1 <= k <= k0");
  if (!(gamma > 0.0)) throw config_error("DiagnosticsConfig: gamma must be > 0");
  if (!(eta > 0.0)) throw config_error("DiagnosticsConfig: eta must be > 0");
}

double DiagnosticsConfig::radius_for(int n) const {
  if (r > 0.0) return r;
  // Slowly diverging default keeps the tail region inside the grid.
  return std::pow(static_cast<double>(n), 0.125);
}

double tensor_norm_1(const Vec& h, int k) {
  if (k < 1) throw std::invalid_argument("tensor_norm_1: k must be >= 1");
  return std::pow(h.lpNorm<1>(), k);
}

WeightedL1 weighted_l1_distance(const GridDensity& a, const GridDensity& b,
                                int k) {
  if (k < 1) throw std::invalid_argument("weighted_l1_distance: k must be >= 1");
  require_same_axes(a, b);
  const double p_factor = std::pow(static_cast<double>(a.dim()), 0.5 * k);
  KahanSum z0, z_upper;
  a.for_each_node([&](std::size_t flat, const Vec& h, double w) {
    const double gap = std::abs(a.density(flat) - b.density(flat));
    z0.add(w * tensor_norm_1(h, k) * gap);
    z_upper.add(w * p_factor * std::pow(h.norm(), k) * gap);
  });
  return WeightedL1{z0.value(), z_upper.value()};
}

double tv_distance(const GridDensity& a, const GridDensity& b) {
  require_same_axes(a, b);
  KahanSum sum;
  a.for_each_node([&](std::size_t flat, const Vec&, double w) {
    sum.add(w * std::abs(a.density(flat) - b.density(flat)));
  });
  return std::clamp(0.5 * sum.value(), 0.0, 1.0);
}

double lan_remainder_sup(const ModelSpec& model, const Dataset& data,
                         const Vec& theta_star, const Mat& V,
                         const std::vector<Vec>& h_grid, const Vec& delta) {
  model.require_inside(theta_star);
  const double root_n = std::sqrt(static_cast<double>(data.size()));
  double sup = 0.0;
  for (const Vec& h : h_grid) {
    const Vec shifted = theta_star + h / root_n;
    if (!model.inside_box(shifted)) {
      std::ostringstream msg;
      msg << "lan_remainder_sup: theta* + h/sqrt(n) leaves the parameter box "
             "at h = " << h.transpose();
      throw std::domain_error(msg.str());
    }
    // Per-observation log-ratio sum avoids the O(n) cancellation of
    // differencing two full log-likelihoods.
    KahanSum ratio;
    for (const auto& obs : data)
      ratio.add(model.log_density_one(obs, shifted) -
                model.log_density_one(obs, theta_star));
    const double remainder = ratio.value() - h.dot(V * delta) +
                             0.5 * h.dot(V * h);
    sup = std::max(sup, std::abs(remainder));
  }
  return sup;
}

double lan_remainder_sup(const ModelSpec& model, const Dataset& data,
                         const Vec& theta_star, const Mat& V,
                         const std::vector<Vec>& h_grid) {
  const MleFit fit = fit_mle(model, data, theta_star, theta_star);
  return lan_remainder_sup(model, data, theta_star, V, h_grid, *fit.delta);
}

double concentration_tail_mass(const GridDensity& g, double r) {
  if (!(r > 0.0))
    throw std::invalid_argument("concentration_tail_mass: r must be > 0");
  KahanSum sum;
  g.for_each_node([&](std::size_t flat, const Vec& h, double w) {
    if (h.norm() > r) sum.add(w * g.density(flat));
  });
  return std::clamp(sum.value(), 0.0, 1.0);
}

FnRatioSuprema fn_ratio_suprema(const GridDensity& post, const GridDensity& lim,
                                double r) {
  require_same_axes(post, lim);
  if (!(r > 0.0)) throw std::invalid_argument("fn_ratio_suprema: r must be > 0");

  // f+(g,h) depends on the pair only through L(h) - L(g) with
  // L(u) = log lim(u) - log post(u), so the suprema over all pairs are reached
  // at the extremes of L over the ball; no pair enumeration or subsampling is
  // needed.
  constexpr double kLogPositive = -700.0;  // below this exp() underflows to 0
  double min_l = std::numeric_limits<double>::infinity();
  double max_l = -std::numeric_limits<double>::infinity();
  std::size_t in_ball = 0;
  post.for_each_node([&](std::size_t flat, const Vec& h, double) {
    if (h.norm() > r) return;
    const double log_post = post.log_values()[flat];
    const double log_lim = lim.log_values()[flat];
    if (log_post < kLogPositive || log_lim < kLogPositive) {
      std::ostringstream msg;
      msg << "fn_ratio_suprema: density numerically zero inside the ball at "
             "h = " << h.transpose();
      throw numerical_error(msg.str());
    }
    ++in_ball;
    const double l = log_lim - log_post;
    min_l = std::min(min_l, l);
    max_l = std::max(max_l, l);
  });

  FnRatioSuprema out;
  out.ball_nodes = in_ball;
  if (in_ball < 2) return out;  // sup over an empty pair set

  const double log_q_min = min_l - max_l;  // most extreme ratio, <= 0
  out.sup_plus = std::max(0.0, 1.0 - std::exp(log_q_min));
  out.sup_minus = std::max(0.0, 1.0 - std::exp(-(max_l - min_l)));
  if (std::abs(out.sup_plus - out.sup_minus) > 1e-12)
    throw property_violation(
        "fn_ratio_suprema: sup f- != sup f+ under pair swap (internal "
        "consistency)");
  return out;
}

BoundCheck moment_ratio_bound_check(const GridDensity& phi, const GridDensity& psi,
                              int k, double K_radius) {
  if (k < 1) throw std::invalid_argument("moment_ratio_bound_check: k must be >= 1");
  require_same_axes(phi, psi);

  // phi plays the first-density role; the suprema functional takes
  // (post = psi, lim = phi).
  const FnRatioSuprema sup = fn_ratio_suprema(psi, phi, K_radius);

  KahanSum lhs, s_psi, s_phi, tail;
  phi.for_each_node([&](std::size_t flat, const Vec& h, double w) {
    const double s = std::pow(h.norm(), k);
    const double fphi = phi.density(flat);
    const double fpsi = psi.density(flat);
    lhs.add(w * s * std::abs(fphi - fpsi));
    s_psi.add(w * s * fpsi);
    s_phi.add(w * s * fphi);
    if (h.norm() > K_radius) tail.add(w * s * (fphi + fpsi));
  });

  BoundCheck check;
  check.lhs = lhs.value();
  check.rhs = sup.sup_plus * s_psi.value() + sup.sup_minus * s_phi.value() +
              tail.value();
  return check;
}

BoundCheck tail_moment_bound(const GridDensity& g, int k, double gamma,
                             double r) {
  if (k < 1) throw std::invalid_argument("tail_moment_bound: k must be >= 1");
  if (!(gamma > 0.0) || !(r > 0.0))
    throw std::invalid_argument("tail_moment_bound: gamma and r must be > 0");
  KahanSum lhs, high_moment;
  g.for_each_node([&](std::size_t flat, const Vec& h, double w) {
    const double norm = h.norm();
    const double mass = w * g.density(flat);
    if (norm > r) lhs.add(mass * std::pow(norm, k));
    high_moment.add(mass * std::pow(norm, k * (1.0 + gamma)));
  });
  if (!std::isfinite(high_moment.value()))
    throw numerical_error("tail_moment_bound: E||Z||^(k(1+gamma)) not finite");
  BoundCheck check;
  check.lhs = lhs.value();
  check.rhs = (gamma + 1.0) / (gamma * std::pow(r, gamma)) * high_moment.value();
  return check;
}

BoundCheck tail_moment_bound(const std::vector<double>& sample_norms, int k,
                             double gamma, double r) {
  if (k < 1) throw std::invalid_argument("tail_moment_bound: k must be >= 1");
  if (!(gamma > 0.0) || !(r > 0.0))
    throw std::invalid_argument("tail_moment_bound: gamma and r must be > 0");
  if (sample_norms.empty())
    throw std::invalid_argument("tail_moment_bound: empty sample");
  KahanSum lhs, high_moment;
  for (double norm : sample_norms) {
    if (norm > r) lhs.add(std::pow(norm, k));
    high_moment.add(std::pow(norm, k * (1.0 + gamma)));
  }
  const double inv_n = 1.0 / static_cast<double>(sample_norms.size());
  if (!std::isfinite(high_moment.value()))
    throw numerical_error("tail_moment_bound: E||Z||^(k(1+gamma)) not finite");
  BoundCheck check;
  check.lhs = lhs.value() * inv_n;
  check.rhs = (gamma + 1.0) / (gamma * std::pow(r, gamma)) *
              high_moment.value() * inv_n;
  return check;
}

std::vector<Vec> box_grid(int p, double halfwidth, int points_per_dim) {
  if (p < 1 || points_per_dim < 2 || !(halfwidth > 0.0))
    throw std::invalid_argument("box_grid: bad arguments");
  const auto axis = linspace(-halfwidth, halfwidth, points_per_dim);
  std::vector<Vec> points;
  std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0);
  const std::size_t total =
      static_cast<std::size_t>(std::pow(points_per_dim, p));
  points.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    Vec point(p);
    for (int d = 0; d < p; ++d)
      point[d] = axis[idx[static_cast<std::size_t>(d)]];
    points.push_back(std::move(point));
    int d = p - 1;
    while (d >= 0 && ++idx[static_cast<std::size_t>(d)] ==
                         static_cast<std::size_t>(points_per_dim)) {
      idx[static_cast<std::size_t>(d)] = 0;
      --d;
    }
  }
  return points;
}

}  // namespace powerpost
