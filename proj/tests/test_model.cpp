#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "powerpost/errors.hpp"
#include "powerpost/families.hpp"
#include "powerpost/model.hpp"
#include "powerpost/rng.hpp"
#include "test_oracles.hpp"

using namespace powerpost;

namespace {

// The canonical (process, model) pairings exercised throughout the project.
struct Pairing {
  const char* process;
  const char* model;
};
constexpr Pairing kPairs[] = {
    {"gaussian", "gaussian_location"},   {"laplace", "gaussian_location"},
    {"student_t5", "gaussian_location"}, {"laplace", "laplace_location"},
    {"logistic", "logistic"},            {"gaussian_2d", "gaussian_location_2d"},
};

Vec vec1(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("sample_data is deterministic per (n, seed)") {
  const TrueProcess process = make_gaussian_process(0.0, 1.0);
  const Dataset a = sample_data(process, 3, 7);
  const Dataset b = sample_data(process, 3, 7);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].y == b[i].y);
  const Dataset c = sample_data(process, 3, 8);
  CHECK(c[0].y != a[0].y);
}

TEST_CASE("laplace sample mean obeys the law of large numbers") {
  const Dataset data = sample_data(find_process("laplace"), 10'000, 1);
  double mean = 0.0;
  for (const auto& obs : data) mean += obs.y;
  mean /= static_cast<double>(data.size());
  CHECK(std::abs(mean - 0.0) < 0.05);
}

TEST_CASE("sample_data rejects n = 0") {
  CHECK_THROWS_AS(sample_data(find_process("gaussian"), 0, 1),
                  std::invalid_argument);
}

TEST_CASE("log_likelihood single-point evaluations") {
  const ModelSpec& model = find_model("gaussian_location");
  const Dataset single = {Observation{0.0, 0.0}};
  CHECK(log_likelihood(model, vec1(0.0), single) ==
        doctest::Approx(-0.91893853320467274).epsilon(1e-12));

  const Dataset pair = {Observation{1.0, 0.0}, Observation{-1.0, 0.0}};
  CHECK(log_likelihood(model, vec1(0.0), pair) ==
        doctest::Approx(-std::log(2.0 * oracles::kPi) - 1.0).epsilon(1e-12));
}

TEST_CASE("log_likelihood rejects theta outside the box") {
  const ModelSpec& model = find_model("gaussian_location");
  const Dataset data = {Observation{0.0, 0.0}};
  CHECK_THROWS_AS(log_likelihood(model, vec1(25.0), data), std::domain_error);
}

TEST_CASE("laplace log-likelihood is maximal at the sample median") {
  const ModelSpec& model = find_model("laplace_location");
  const Dataset data = sample_data(find_process("laplace"), 100, 3);
  std::vector<double> ys;
  for (const auto& obs : data) ys.push_back(obs.y);
  std::sort(ys.begin(), ys.end());
  const double med = 0.5 * (ys[49] + ys[50]);

  const double at_median = log_likelihood(model, vec1(med), data);
  for (double t = med - 2.0; t <= med + 2.0; t += 0.01)
    CHECK(at_median >= log_likelihood(model, vec1(t), data) - 1e-12);
}

TEST_CASE("scores match central finite differences of the log density") {
  Rng rng(2024);
  for (const std::string name :
       {"gaussian_location", "laplace_location", "logistic",
        "gaussian_location_2d"}) {
    const ModelSpec& model = find_model(name);
    CAPTURE(name);
    double worst = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
      Observation obs;
      obs.y = rng.normal(0.0, 2.0);
      obs.x = rng.normal(0.0, 2.0);
      if (name == "logistic") obs.y = rng.bernoulli(0.5) ? 1.0 : 0.0;
      Vec theta(model.dim_p);
      for (int j = 0; j < model.dim_p; ++j) theta[j] = rng.uniform(-3.0, 3.0);
      // Central differences are undefined across the Laplace kink.
      if (name == "laplace_location" && std::abs(obs.y - theta[0]) < 1e-3)
        theta[0] += 0.01;

      const Vec analytic = model.score_one(obs, theta);
      ModelSpec no_score = model;
      no_score.score_one = nullptr;
      const Vec fallback = no_score.score(obs, theta);
      const double err =
          (analytic - fallback).norm() / std::max(1.0, analytic.norm());
      worst = std::max(worst, err);
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("prior densities are positive on a ball around every pseudo-true point") {
  Rng rng(99);
  for (const auto& pair : kPairs) {
    const TrueProcess& process = find_process(pair.process);
    const ModelSpec& model = find_model(pair.model);
    const Vec theta_star = *process.pseudo_true;
    for (const auto& prior_name : prior_names()) {
      const Prior& prior = find_prior(prior_name);
      CAPTURE(pair.model);
      CAPTURE(prior_name);
      bool all_positive = true;
      for (int probe = 0; probe < 1000; ++probe) {
        Vec direction(model.dim_p);
        for (int j = 0; j < model.dim_p; ++j) direction[j] = rng.normal();
        direction.normalize();
        const double radius = 0.5 * std::pow(rng.uniform(), 1.0 / model.dim_p);
        const Vec point = theta_star + radius * direction;
        // Positivity of pi means a finite log density.
        all_positive = all_positive && std::isfinite(prior.log_density(point));
      }
      CHECK(all_positive);
    }
  }
}

TEST_CASE("pseudo_true_parameter recovers every built-in pseudo-true point") {
  for (const auto& pair : kPairs) {
    const TrueProcess& process = find_process(pair.process);
    const ModelSpec& model = find_model(pair.model);
    CAPTURE(pair.process);
    CAPTURE(pair.model);
    const Vec estimate = pseudo_true_parameter(process, model);
    const Vec truth = *process.pseudo_true;
    REQUIRE(estimate.size() == truth.size());
    for (Eigen::Index j = 0; j < truth.size(); ++j)
      CHECK(std::abs(estimate[j] - truth[j]) < 1e-3);
  }
}

TEST_CASE("pseudo-true points sit strictly inside the parameter box") {
  for (const auto& pair : kPairs) {
    const TrueProcess& process = find_process(pair.process);
    const ModelSpec& model = find_model(pair.model);
    CHECK(model.inside_box(*process.pseudo_true));
  }
}

TEST_CASE("dataset text serialization round-trips") {
  const Dataset data = sample_data(find_process("logistic"), 25, 13);
  std::stringstream io;
  write_dataset(io, data, 2);
  const Dataset back = read_dataset(io);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].y == data[i].y);
    CHECK(back[i].x == data[i].x);
  }

  const Dataset scalar = sample_data(find_process("gaussian"), 10, 5);
  std::stringstream io1;
  write_dataset(io1, scalar, 1);
  const Dataset back1 = read_dataset(io1);
  REQUIRE(back1.size() == scalar.size());
  for (std::size_t i = 0; i < scalar.size(); ++i)
    CHECK(back1[i].y == scalar[i].y);
}

}  // TEST_SUITE
