#include <doctest.h>

#include <cmath>

#include "powerpost/errors.hpp"
#include "powerpost/families.hpp"
#include "powerpost/diagnostics.hpp"
#include "powerpost/posterior.hpp"
#include "test_oracles.hpp"

using namespace powerpost;

namespace {

Vec vec1(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

// Worked conjugate setup: four observations summing to 4.
const Dataset kConjugateData = {Observation{1.0, 0.0}, Observation{1.0, 0.0},
                                Observation{1.0, 0.0}, Observation{1.0, 0.0}};

GridDensity conjugate_grid(double alpha, const Prior& prior) {
  const ModelSpec& model = find_model("gaussian_location");
  const MleFit fit = fit_mle(model, kConjugateData, vec1(0.0), Vec::Zero(1));
  const CurvatureEstimates curv =
      estimate_curvature(model, kConjugateData, fit.theta_hat);
  AlphaConfig cfg;
  cfg.alpha = alpha;
  return normalize_on_grid(model, prior, kConjugateData, cfg, fit, curv);
}

}  // namespace

TEST_SUITE("posterior") {

TEST_CASE("alpha = 1 reduces to the standard unnormalized posterior") {
  const ModelSpec& model = find_model("gaussian_location");
  const Prior& prior = find_prior("std_normal");
  const Dataset data = sample_data(find_process("gaussian"), 50, 4);
  AlphaConfig cfg;
  for (double t : {-1.0, 0.0, 0.7}) {
    const double direct =
        log_likelihood(model, vec1(t), data) + prior.log_density(vec1(t));
    CHECK(log_unnormalized_posterior(model, prior, data, cfg, vec1(t)) ==
          doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("conjugate log posterior is a parabola with the predicted vertex") {
  const ModelSpec& model = find_model("gaussian_location");
  const Prior& prior = find_prior("std_normal");

  // alpha = 0.5: precision 3, mean 2/3.
  AlphaConfig half;
  half.alpha = 0.5;
  const auto value = [&](const AlphaConfig& cfg, double t) {
    return log_unnormalized_posterior(model, prior, kConjugateData, cfg, vec1(t));
  };
  CHECK(value(half, 0.0) - value(half, 2.0 / 3.0) ==
        doctest::Approx(-(3.0 / 2.0) * (2.0 / 3.0) * (2.0 / 3.0)).epsilon(1e-12));
  // Curvature 3: symmetric second difference around the vertex.
  const double d = 0.25;
  CHECK(value(half, 2.0 / 3.0 + d) + value(half, 2.0 / 3.0 - d) -
            2.0 * value(half, 2.0 / 3.0) ==
        doctest::Approx(-3.0 * d * d).epsilon(1e-10));

  // alpha = 2: precision 9, mean 8/9.
  AlphaConfig twice;
  twice.alpha = 2.0;
  CHECK(value(twice, 0.0) - value(twice, 8.0 / 9.0) ==
        doctest::Approx(-(9.0 / 2.0) * (8.0 / 9.0) * (8.0 / 9.0)).epsilon(1e-12));
  CHECK(value(twice, 8.0 / 9.0 + d) + value(twice, 8.0 / 9.0 - d) -
            2.0 * value(twice, 8.0 / 9.0) ==
        doctest::Approx(-9.0 * d * d).epsilon(1e-10));
}

TEST_CASE("grid posterior reproduces the conjugate closed form") {
  const GridDensity post = conjugate_grid(0.5, find_prior("std_normal"));
  CHECK(grid_mean(post)[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(grid_covariance(post)(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("large-n posterior is close to its gaussian approximation in TV") {
  const ModelSpec& model = find_model("gaussian_location");
  const Prior& prior = find_prior("std_normal");
  const int n = 10'000;
  const Dataset data = sample_data(find_process("gaussian"), n, 12);
  const MleFit fit = fit_mle(model, data, vec1(0.0));
  const CurvatureEstimates curv = estimate_curvature(model, data, fit.theta_hat);
  AlphaConfig cfg;
  const GridDensity post = normalize_on_grid(model, prior, data, cfg, fit, curv);
  const LimitingGaussian lim = limiting_gaussian(fit, curv, 1.0, n, Frame::theta);
  const GridDensity lim_grid =
      tabulate_gaussian(post.axes(), lim.mean, lim.covariance, Frame::theta);
  CHECK(tv_distance(post, lim_grid) < 0.05);
}

TEST_CASE("a prior far outside the grid raises a grid-too-narrow error") {
  const Prior far_prior = make_gaussian_prior(100.0, 0.1, "narrow_far_test");
  CHECK_THROWS_AS(conjugate_grid(1.0, far_prior), grid_error);
}

TEST_CASE("lan frame of the conjugate posterior") {
  const GridDensity post = conjugate_grid(0.5, find_prior("std_normal"));
  const GridDensity post_lan = to_lan_frame(post, Vec::Zero(1), 4.0);
  CHECK(grid_abs_moment(post_lan, 0.0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(grid_mean(post_lan)[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-6));

  const GridDensity back = to_theta_frame(post_lan);
  double worst = 0.0;
  for (std::size_t i = 0; i < post.size(); ++i)
    worst = std::max(worst,
                     std::abs(back.log_values()[i] - post.log_values()[i]));
  CHECK(worst < 1e-10);
}

TEST_CASE("posterior precision scales exactly as alpha n + prior precision") {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const GridDensity post = conjugate_grid(alpha, find_prior("std_normal"));
    const double expected_var = 1.0 / (alpha * 4.0 + 1.0);
    CAPTURE(alpha);
    CHECK(grid_covariance(post)(0, 0) ==
          doctest::Approx(expected_var).epsilon(1e-6));
  }
}

TEST_CASE("metropolis chain agrees with the conjugate mean and is deterministic") {
  const ModelSpec& model = find_model("gaussian_location");
  const Prior& prior = find_prior("std_normal");
  AlphaConfig cfg;
  cfg.alpha = 0.5;
  const auto chain = sample_posterior(model, prior, kConjugateData, cfg, 100'000, 11);
  std::vector<double> values;
  values.reserve(chain.size());
  for (const auto& theta : chain) values.push_back(theta[0]);
  const double mean = oracles::sample_mean(values);
  const double se = oracles::chain_standard_error(values);
  CHECK(std::abs(mean - 2.0 / 3.0) < 3.0 * se);

  const auto rerun = sample_posterior(model, prior, kConjugateData, cfg, 100'000, 11);
  REQUIRE(rerun.size() == chain.size());
  bool identical = true;
  for (std::size_t i = 0; i < chain.size(); ++i)
    identical = identical && rerun[i][0] == chain[i][0];
  CHECK(identical);

  CHECK_THROWS_AS(
      sample_posterior(model, prior, kConjugateData, cfg, 5000, 11),
      std::invalid_argument);
}

TEST_CASE("a flat target cannot mix and is reported") {
  ModelSpec flat;
  flat.dim_p = 1;
  // A box wide enough that burn-in adaptation can never blow the proposal
  // past it: acceptance stays pinned at 1 on the flat target.
  flat.theta_box = {Interval{-1e9, 1e9}};
  flat.name = "flat";
  flat.log_density_one = [](const Observation& obs, const Vec&) {
    return -0.5 * obs.y * obs.y;
  };
  Prior flat_prior;
  flat_prior.name = "flat";
  flat_prior.log_density = [](const Vec&) { return 0.0; };
  const Dataset data = sample_data(find_process("gaussian"), 100, 3);
  AlphaConfig cfg;
  CHECK_THROWS_AS(sample_posterior(flat, flat_prior, data, cfg, 20'000, 4),
                  mixing_error);
}

TEST_CASE("grid and sampler first moments agree for every built-in model") {
  struct Pairing {
    const char* process;
    const char* model;
  };
  constexpr Pairing pairs[] = {{"gaussian", "gaussian_location"},
                               {"laplace", "laplace_location"},
                               {"logistic", "logistic"},
                               {"gaussian_2d", "gaussian_location_2d"}};
  const Prior& prior = find_prior("gaussian_wide");
  for (const auto& pair : pairs) {
    const ModelSpec& model = find_model(pair.model);
    // Odd n keeps the Laplace-location MLE unique.
    const Dataset data = sample_data(find_process(pair.process), 401, 19);
    AlphaConfig cfg;
    const GridDensity post = normalize_on_grid(model, prior, data, cfg);
    const Vec post_mean = grid_mean(post);
    const auto chain = sample_posterior(model, prior, data, cfg, 100'000, 23);
    CAPTURE(pair.model);
    for (int j = 0; j < model.dim_p; ++j) {
      std::vector<double> coord;
      coord.reserve(chain.size());
      for (const auto& theta : chain) coord.push_back(theta[j]);
      const double se = oracles::chain_standard_error(coord);
      CHECK(std::abs(oracles::sample_mean(coord) - post_mean[j]) < 4.0 * se);
    }
  }
}

}  // TEST_SUITE
