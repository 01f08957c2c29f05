#pragma once

// Built-in model / process / prior catalog.
//
// Models (all on the box [-20, 20] per coordinate):
//   gaussian_location     N(theta, 1), p = 1
//   laplace_location      Laplace(theta, 1), p = 1
//   logistic              P(y=1|x) = sigmoid(theta * x), p = 1
//   gaussian_location_2d  N(theta, I2), p = 2
//
// Processes (deterministic seeded samplers with known pseudo-true points):
//   gaussian      y ~ N(0, 1)
//   laplace       y ~ Laplace(0, 1)            (variance 2)
//   student_t5    y ~ 0.5 + t(5)               (mean 0.5, variance 5/3)
//   logistic      x ~ N(0,1), y ~ Bern(sigmoid(0.75 x))
//   gaussian_2d   (y, x) ~ N((0.3, -0.2), I2)
//
// Priors: std_normal N(0,1), gaussian_wide N(0,100), flat_wide N(0,1e6),
// narrow_far N(100, 0.01); all apply independently per coordinate.

#include <string>
#include <string_view>
#include <vector>

#include "powerpost/model.hpp"

namespace powerpost {

const ModelSpec& find_model(std::string_view name);
const TrueProcess& find_process(std::string_view name);
const Prior& find_prior(std::string_view name);

std::vector<std::string> model_names();
std::vector<std::string> process_names();
std::vector<std::string> prior_names();

// Parameterized constructors used by tests and by custom setups.
ModelSpec make_gaussian_location_model(double sigma = 1.0);
TrueProcess make_gaussian_process(double mean, double sd);
TrueProcess make_laplace_process(double loc, double scale);
TrueProcess make_student_t5_process(double loc);
TrueProcess make_logistic_process(double coefficient);
Prior make_gaussian_prior(double mean, double sd, std::string name);

double sigmoid(double t);

}  // namespace powerpost
