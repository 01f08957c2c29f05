#include <doctest.h>

#include <cmath>
#include <sstream>

#include "powerpost/errors.hpp"
#include "powerpost/grid_density.hpp"
#include "powerpost/numeric.hpp"
#include "test_oracles.hpp"

using namespace powerpost;

namespace {

GridDensity standard_normal_grid(int nodes = 4001, double halfwidth = 12.0) {
  const auto axes = centered_axes(Vec::Zero(1), Vec::Constant(1, halfwidth), nodes);
  return tabulate_gaussian(axes, Vec::Zero(1), Mat::Identity(1, 1), Frame::h,
                           GridDensity::Normalize::check, LanMeta{Vec::Zero(1), 1.0});
}

}  // namespace

TEST_SUITE("grid_density") {

TEST_CASE("tabulated gaussian mass and moments") {
  const GridDensity g = standard_normal_grid();
  CHECK(grid_abs_moment(g, 0.0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(grid_abs_moment(g, 2.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(grid_mean(g)[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  CHECK(grid_covariance(g)(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("negative moment order is rejected") {
  const GridDensity g = standard_normal_grid(101, 6.0);
  CHECK_THROWS_AS(grid_abs_moment(g, -1.0), std::invalid_argument);
}

TEST_CASE("non-finite log values are rejected") {
  auto axes = centered_axes(Vec::Zero(1), Vec::Constant(1, 1.0), 3);
  std::vector<double> values = {0.0, -std::numeric_limits<double>::infinity(), 0.0};
  CHECK_THROWS_AS(GridDensity::from_log_values(axes, values, Frame::theta,
                                               GridDensity::Normalize::renormalize),
                  grid_error);
}

TEST_CASE("normalization check flags unnormalized tabulations") {
  auto axes = centered_axes(Vec::Zero(1), Vec::Constant(1, 12.0), 2001);
  CHECK_THROWS_AS(
      GridDensity::tabulate(
          axes, [](const Vec& u) { return -0.5 * u.squaredNorm() + 1.0; },
          Frame::theta, GridDensity::Normalize::check),
      grid_error);
}

TEST_CASE("lan frame transform normalizes and round-trips") {
  const auto axes = centered_axes(Vec::Constant(1, 0.4), Vec::Constant(1, 2.0), 801);
  const GridDensity theta_grid = tabulate_gaussian(
      axes, Vec::Constant(1, 0.4), 0.04 * Mat::Identity(1, 1), Frame::theta);

  Vec theta_star = Vec::Constant(1, 0.1);
  const GridDensity h_grid = to_lan_frame(theta_grid, theta_star, 25.0);
  CHECK(grid_abs_moment(h_grid, 0.0) == doctest::Approx(1.0).epsilon(1e-8));
  // Mean transforms linearly: sqrt(n) (E theta - theta_star).
  CHECK(grid_mean(h_grid)[0] ==
        doctest::Approx(5.0 * (0.4 - 0.1)).epsilon(1e-9));

  const GridDensity back = to_theta_frame(h_grid);
  REQUIRE(back.size() == theta_grid.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i)
    worst = std::max(worst,
                     std::abs(back.log_values()[i] - theta_grid.log_values()[i]));
  CHECK(worst < 1e-10);
}

TEST_CASE("lan frame with n = 1 and theta_star = 0 is the identity") {
  const auto axes = centered_axes(Vec::Zero(1), Vec::Constant(1, 8.0), 501);
  const GridDensity theta_grid =
      tabulate_gaussian(axes, Vec::Zero(1), Mat::Identity(1, 1), Frame::theta);
  const GridDensity h_grid = to_lan_frame(theta_grid, Vec::Zero(1), 1.0);
  for (std::size_t i = 0; i < theta_grid.size(); ++i)
    CHECK(h_grid.log_values()[i] == theta_grid.log_values()[i]);
  CHECK(h_grid.axes() == theta_grid.axes());
}

TEST_CASE("frame transform preconditions") {
  const GridDensity h = standard_normal_grid(101, 6.0);
  CHECK_THROWS_AS(to_lan_frame(h, Vec::Zero(1), 4.0), std::invalid_argument);
  const GridDensity theta = to_theta_frame(h);
  CHECK_THROWS_AS(to_theta_frame(theta), std::invalid_argument);
}

TEST_CASE("grid csv round-trips exactly") {
  Vec mean(2);
  mean << 0.3, -0.2;
  Mat cov(2, 2);
  cov << 1.0, 0.3, 0.3, 0.8;
  const auto axes = centered_axes(mean, Vec::Constant(2, 10.0), 41);
  const GridDensity g =
      tabulate_gaussian(axes, mean, cov, Frame::h, GridDensity::Normalize::renormalize,
                        LanMeta{mean, 16.0});

  std::stringstream io;
  write_grid_csv(io, g);
  const GridDensity back = read_grid_csv(io);
  REQUIRE(back.size() == g.size());
  REQUIRE(back.frame() == Frame::h);
  CHECK(back.lan_meta().n == 16.0);
  CHECK(back.lan_meta().theta_star[1] == -0.2);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(back.log_values()[i] == g.log_values()[i]);
}

TEST_CASE("axis sharing is enforced") {
  const GridDensity a = standard_normal_grid(101, 6.0);
  const GridDensity b = standard_normal_grid(201, 6.0);
  CHECK_THROWS_AS(require_same_axes(a, b), grid_error);
}

}  // TEST_SUITE
