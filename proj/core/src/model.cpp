#include "powerpost/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "powerpost/errors.hpp"
#include "powerpost/numeric.hpp"

namespace powerpost {

namespace {

// Seed of the Monte Carlo sample behind pseudo_true_parameter. Fixed so the
// oracle is a deterministic function of (process, model).
constexpr std::uint64_t kPseudoTrueSeed = 0x5eed0f0aULL;

std::string format_theta(const Vec& theta) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (j) os << ", ";
    os << theta[j];
  }
  os << ")";
  return os.str();
}

}  // namespace

bool ModelSpec::inside_box(const Vec& theta) const {
  if (theta.size() != dim_p) return false;
  for (int j = 0; j < dim_p; ++j) {
    if (!(theta[j] > theta_box[static_cast<std::size_t>(j)].lo &&
          theta[j] < theta_box[static_cast<std::size_t>(j)].hi))
      return false;
  }
  return true;
}

void ModelSpec::require_inside(const Vec& theta) const {
  if (!inside_box(theta))
    throw std::domain_error("model '" + name + "': theta " +
                            format_theta(theta) + " outside parameter box");
}

Vec ModelSpec::score(const Observation& obs, const Vec& theta) const {
  if (score_one) return score_one(obs, theta);
  Vec g(dim_p);
  Vec probe = theta;
  for (int j = 0; j < dim_p; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[j]));
    probe[j] = theta[j] + h;
    const double fp = log_density_one(obs, probe);
    probe[j] = theta[j] - h;
    const double fm = log_density_one(obs, probe);
    probe[j] = theta[j];
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Dataset sample_data(const TrueProcess& process, int n, std::uint64_t seed) {
  if (n < 1)
    throw std::invalid_argument("sample_data: n must be at least 1, got " +
                                std::to_string(n));
  return process.sampler(n, seed);
}

double log_likelihood(const ModelSpec& model, const Vec& theta,
                      const Dataset& data) {
  model.require_inside(theta);
  KahanSum sum;
  for (const auto& obs : data) sum.add(model.log_density_one(obs, theta));
  const double value = sum.value();
  if (!std::isfinite(value))
    throw numerical_error("log_likelihood: non-finite value at theta " +
                          format_theta(theta) + " for model '" + model.name +
                          "'");
  return value;
}

namespace {

// Mean log density over a data prefix; errors identify the offending theta.
double mc_objective(const ModelSpec& model, const Dataset& data,
                    std::size_t count, const Vec& theta) {
  KahanSum sum;
  for (std::size_t i = 0; i < count; ++i)
    sum.add(model.log_density_one(data[i], theta));
  const double value = sum.value() / static_cast<double>(count);
  if (!std::isfinite(value))
    throw numerical_error(
        "pseudo_true_parameter: E0[log f] estimate non-finite at theta " +
        format_theta(theta));
  return value;
}

}  // namespace

Vec pseudo_true_parameter(const TrueProcess& process, const ModelSpec& model,
                          std::int64_t draws) {
  if (draws < 1000)
    throw std::invalid_argument("pseudo_true_parameter: too few draws");
  const Dataset data =
      sample_data(process, static_cast<int>(draws), kPseudoTrueSeed);
  const int p = model.dim_p;

  std::vector<double> lo(static_cast<std::size_t>(p)),
      hi(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    const auto& box = model.theta_box[static_cast<std::size_t>(j)];
    const double margin = 1e-9 * (box.hi - box.lo);
    lo[static_cast<std::size_t>(j)] = box.lo + margin;
    hi[static_cast<std::size_t>(j)] = box.hi - margin;
  }

  const std::size_t subsample =
      std::min<std::size_t>(data.size(), 100'000);

  Vec best(p);
  if (p == 1) {
    // Coarse pass over the whole box on a data prefix.
    const auto coarse = linspace(lo[0], hi[0], 401);
    double best_val = -std::numeric_limits<double>::infinity();
    Vec theta(1);
    for (double t : coarse) {
      theta[0] = t;
      const double v = mc_objective(model, data, subsample, theta);
      if (v > best_val) {
        best_val = v;
        best = theta;
      }
    }
    // Dense 1e-2 grid near the coarse optimum, full sample.
    const double w = 0.12;
    const double glo = std::max(lo[0], best[0] - w);
    const double ghi = std::min(hi[0], best[0] + w);
    const int points = static_cast<int>(std::lround((ghi - glo) / 1e-2)) + 1;
    const auto dense = linspace(glo, ghi, std::max(points, 5));
    best_val = -std::numeric_limits<double>::infinity();
    for (double t : dense) {
      theta[0] = t;
      const double v = mc_objective(model, data, data.size(), theta);
      if (v > best_val) {
        best_val = v;
        best = theta;
      }
    }
    // Golden-section refinement to 1e-6.
    const double rlo = std::max(lo[0], best[0] - 1.5e-2);
    const double rhi = std::min(hi[0], best[0] + 1.5e-2);
    best[0] = golden_section_max(
        [&](double t) {
          Vec th(1);
          th[0] = t;
          return mc_objective(model, data, data.size(), th);
        },
        rlo, rhi, 1e-6);
    return best;
  }

  // p >= 2: coarse product grid on a prefix, then cyclic coordinate
  // refinement on the full sample.
  const int coarse_per_dim = 41;
  std::vector<std::vector<double>> coarse_axes;
  for (int j = 0; j < p; ++j)
    coarse_axes.push_back(linspace(lo[static_cast<std::size_t>(j)],
                                   hi[static_cast<std::size_t>(j)],
                                   coarse_per_dim));
  std::vector<int> idx(static_cast<std::size_t>(p), 0);
  double best_val = -std::numeric_limits<double>::infinity();
  Vec theta(p);
  bool done = false;
  while (!done) {
    for (int j = 0; j < p; ++j)
      theta[j] = coarse_axes[static_cast<std::size_t>(j)]
                            [static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
    const double v = mc_objective(model, data, subsample, theta);
    if (v > best_val) {
      best_val = v;
      best = theta;
    }
    int d = p - 1;
    while (d >= 0 && ++idx[static_cast<std::size_t>(d)] == coarse_per_dim) {
      idx[static_cast<std::size_t>(d)] = 0;
      --d;
    }
    done = d < 0;
  }

  for (int sweep = 0; sweep < 8; ++sweep) {
    double moved = 0.0;
    for (int j = 0; j < p; ++j) {
      const double before = best[j];
      const double blo = std::max(lo[static_cast<std::size_t>(j)], before - 0.6);
      const double bhi = std::min(hi[static_cast<std::size_t>(j)], before + 0.6);
      best[j] = golden_section_max(
          [&](double t) {
            Vec th = best;
            th[j] = t;
            return mc_objective(model, data, data.size(), th);
          },
          blo, bhi, 1e-7);
      moved = std::max(moved, std::abs(best[j] - before));
    }
    if (moved < 1e-6) break;
  }
  return best;
}

void write_dataset(std::ostream& out, const Dataset& data, int obs_fields) {
  char buf[64];
  for (const auto& obs : data) {
    std::snprintf(buf, sizeof(buf), "%.17g", obs.y);
    out << buf;
    if (obs_fields > 1) {
      std::snprintf(buf, sizeof(buf), "%.17g", obs.x);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset data;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    Observation obs;
    if (!(fields >> obs.y))
      throw config_error("read_dataset: malformed line '" + line + "'");
    fields >> obs.x;  // optional second field
    data.push_back(obs);
  }
  return data;
}

}  // namespace powerpost
