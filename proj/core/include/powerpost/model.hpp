#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "powerpost/types.hpp"

namespace powerpost {

// One observation. Location families use `y` only; the logistic family keeps
// the binary response in `y` and its covariate in `x`; the bivariate location
// family uses (y, x) as the two coordinates.
struct Observation {
  double y = 0.0;
  double x = 0.0;
};
using Dataset = std::vector<Observation>;

struct Interval {
  double lo = -20.0;
  double hi = 20.0;
};

// A parametric family f(.|theta) on a box-shaped parameter space.
struct ModelSpec {
  int dim_p = 1;
  std::vector<Interval> theta_box;  // one closed interval per coordinate
  std::function<double(const Observation&, const Vec&)> log_density_one;
  // Per-observation score; empty function selects the finite-difference
  // fallback (central differences, step 1e-5 * max(1, |theta_j|)).
  std::function<Vec(const Observation&, const Vec&)> score_one;
  std::string name;

  bool inside_box(const Vec& theta) const;
  // Throws std::domain_error when theta is not strictly inside theta_box.
  void require_inside(const Vec& theta) const;
  Vec score(const Observation& obs, const Vec& theta) const;
};

// The data-generating law: a deterministic seeded i.i.d. sampler, plus the
// pseudo-true parameter when known in closed form (nullopt requests the
// Monte Carlo oracle in pseudo_true_parameter).
struct TrueProcess {
  std::function<Dataset(int n, std::uint64_t seed)> sampler;
  std::optional<Vec> pseudo_true;
  std::string name;
  int obs_fields = 1;  // serialized values per line: 1 (y) or 2 (y x)
};

struct Prior {
  std::function<double(const Vec&)> log_density;
  std::string name;
};

// Draws n observations; deterministic per (n, seed). Rejects n < 1.
Dataset sample_data(const TrueProcess& process, int n, std::uint64_t seed);

// Sum of per-observation log densities under i.i.d. modeling (compensated
// summation). Throws std::domain_error for theta outside the box.
double log_likelihood(const ModelSpec& model, const Vec& theta,
                      const Dataset& data);

// Maximizes a fixed-seed Monte Carlo estimate of E0[log f(X|theta)] over the
// box: coarse grid, then a 1e-2-step local grid, then refinement to 1e-6.
Vec pseudo_true_parameter(const TrueProcess& process, const ModelSpec& model,
                          std::int64_t draws = 10'000'000);

// Plain-text dataset serialization, one observation per line.
void write_dataset(std::ostream& out, const Dataset& data, int obs_fields = 1);
Dataset read_dataset(std::istream& in);

}  // namespace powerpost
