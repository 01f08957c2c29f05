#include <doctest.h>

#include <cmath>

#include "powerpost/diagnostics.hpp"
#include "powerpost/errors.hpp"
#include "powerpost/families.hpp"
#include "powerpost/numeric.hpp"
#include "powerpost/posterior.hpp"
#include "powerpost/rng.hpp"
#include "test_oracles.hpp"

using namespace powerpost;

namespace {

Vec vec1(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

GridDensity gaussian_on(double mean, double sd,
                        const std::vector<std::vector<double>>& axes) {
  return tabulate_gaussian(axes, vec1(mean), sd * sd * Mat::Identity(1, 1),
                           Frame::h, GridDensity::Normalize::renormalize,
                           LanMeta{Vec::Zero(1), 1.0});
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("tensor 1-norm of tensor powers") {
  Vec h2(2);
  h2 << 1.0, 2.0;
  CHECK(tensor_norm_1(h2, 2) == 9.0);
  CHECK(tensor_norm_1(h2, 1) == 3.0);

  // All-ones vector: ||h||_1^k = p^k meets the p^(k/2) ||h||_2^k bound with equality.
  const Vec ones = Vec::Ones(3);
  const int k = 2;
  const double bound = std::pow(3.0, 0.5 * k) * std::pow(ones.norm(), k);
  CHECK(tensor_norm_1(ones, k) == doctest::Approx(std::pow(3.0, k)).epsilon(1e-14));
  CHECK(tensor_norm_1(ones, k) == doctest::Approx(bound).epsilon(1e-14));

  CHECK_THROWS_AS(tensor_norm_1(h2, 0), std::invalid_argument);
}

TEST_CASE("weighted L1 distance and its upper bound") {
  const auto axes = centered_axes(vec1(0.05), Vec::Constant(1, 12.0), 4001);
  const GridDensity a = gaussian_on(0.0, 1.0, axes);
  const GridDensity b = gaussian_on(0.1, 1.0, axes);

  const WeightedL1 same = weighted_l1_distance(a, a, 1);
  CHECK(same.z0 == 0.0);
  CHECK(same.z_upper == 0.0);

  // p = 1: the tensor norm and the bound coincide.
  const WeightedL1 wl = weighted_l1_distance(a, b, 1);
  CHECK(wl.z0 == doctest::Approx(wl.z_upper).epsilon(1e-14));
  CHECK(wl.z0 <= wl.z_upper * (1.0 + 1e-12));

  // Brute-force high-resolution quadrature oracle.
  const double oracle = oracles::fine_grid_weighted_l1(
      [](double x) { return oracles::normal_pdf(x); },
      [](double x) { return oracles::normal_pdf(x - 0.1); }, -11.95, 12.05,
      1'000'001, 1);
  CHECK(std::abs(wl.z0 - oracle) < 1e-4);

  const auto other_axes = centered_axes(vec1(0.0), Vec::Constant(1, 12.0), 2001);
  const GridDensity c = gaussian_on(0.0, 1.0, other_axes);
  CHECK_THROWS_AS(weighted_l1_distance(a, c, 1), grid_error);
}

TEST_CASE("total variation distances") {
  const auto axes = centered_axes(vec1(0.25), Vec::Constant(1, 12.0), 4001);
  const GridDensity a = gaussian_on(0.0, 1.0, axes);
  const GridDensity b = gaussian_on(0.5, 1.0, axes);
  CHECK(tv_distance(a, a) == 0.0);
  CHECK(tv_distance(a, b) ==
        doctest::Approx(oracles::gaussian_tv_equal_var(0.0, 0.5, 1.0)).epsilon(5e-4));
  CHECK(std::abs(tv_distance(a, b) - 0.1974) < 1e-4);

  const auto wide = centered_axes(vec1(5.0), Vec::Constant(1, 17.0), 8001);
  const GridDensity far_a = gaussian_on(0.0, 1.0, wide);
  const GridDensity far_b = gaussian_on(10.0, 1.0, wide);
  CHECK(tv_distance(far_a, far_b) >= 0.999);

  // 2 tv equals the plain L1 distance on shared grids, exactly.
  KahanSum l1;
  a.for_each_node([&](std::size_t flat, const Vec&, double w) {
    l1.add(w * std::abs(a.density(flat) - b.density(flat)));
  });
  CHECK(2.0 * tv_distance(a, b) == l1.value());
}

TEST_CASE("gaussian location model has an exactly quadratic LAN expansion") {
  const ModelSpec& model = find_model("gaussian_location");
  for (int n : {50, 1000, 10'000}) {
    const Dataset data = sample_data(find_process("gaussian"), n, 5 + n);
    const auto h_grid = box_grid(1, 3.0, 61);
    // V = 1 exactly for the unit-variance gaussian location family.
    const double sup =
        lan_remainder_sup(model, data, Vec::Zero(1), Mat::Identity(1, 1), h_grid);
    CAPTURE(n);
    CHECK(sup <= 1e-10);
  }
}

TEST_CASE("LAN remainder vanishes identically at h = 0") {
  const ModelSpec& model = find_model("logistic");
  const Dataset data = sample_data(find_process("logistic"), 200, 3);
  const std::vector<Vec> origin = {Vec::Zero(1)};
  const CurvatureEstimates curv =
      estimate_curvature(model, data, vec1(0.75));
  const double sup = lan_remainder_sup(model, data, vec1(0.75), curv.V, origin);
  CHECK(sup == 0.0);
}

TEST_CASE("LAN remainder flags domain excursions") {
  const ModelSpec& model = find_model("gaussian_location");
  const Dataset data = sample_data(find_process("gaussian"), 4, 2);
  const std::vector<Vec> huge = {vec1(100.0)};  // theta* + 100/sqrt(4) = 50
  CHECK_THROWS_AS(lan_remainder_sup(model, data, Vec::Zero(1),
                                    Mat::Identity(1, 1), huge, Vec::Zero(1)),
                  std::domain_error);
}

TEST_CASE("logistic LAN remainder shrinks with n") {
  const ModelSpec& model = find_model("logistic");
  const TrueProcess& process = find_process("logistic");
  const Vec theta_star = *process.pseudo_true;
  const auto h_grid = box_grid(1, 3.0, 61);
  std::vector<double> medians;
  for (int n : {100, 1000}) {
    std::vector<double> sups;
    for (int seed = 1; seed <= 5; ++seed) {
      const Dataset data = sample_data(process, n, static_cast<std::uint64_t>(seed));
      const CurvatureEstimates curv = estimate_curvature(model, data, theta_star);
      sups.push_back(lan_remainder_sup(model, data, theta_star, curv.V, h_grid));
    }
    medians.push_back(median(sups));
  }
  CHECK(medians[1] < medians[0]);
}

TEST_CASE("concentration tail mass") {
  const auto axes = centered_axes(vec1(0.0), Vec::Constant(1, 12.0), 4001);
  const GridDensity g = gaussian_on(0.0, 1.0, axes);
  CHECK(concentration_tail_mass(g, 13.0) <= 1e-8);

  // Fine grid for the boundary-sensitive analytic check.
  const auto fine = centered_axes(vec1(0.0), Vec::Constant(1, 12.0), 120'001);
  const GridDensity g_fine = gaussian_on(0.0, 1.0, fine);
  CHECK(std::abs(concentration_tail_mass(g_fine, 1.959964) - 0.05) < 1e-4);

  // Markov bound holds on every tabulated density for every r and k0.
  const GridDensity t5 = GridDensity::tabulate(
      axes,
      [](const Vec& u) {
        const double t = u[0];
        return std::lgamma(3.0) - std::lgamma(2.5) -
               0.5 * std::log(5.0 * oracles::kPi) - 3.0 * std::log1p(t * t / 5.0);
      },
      Frame::h, GridDensity::Normalize::renormalize, LanMeta{Vec::Zero(1), 1.0});
  for (const GridDensity* density : {&g, &t5}) {
    for (double r : {0.5, 1.0, 2.2, 5.0}) {
      for (int k0 : {1, 2, 4}) {
        const double tail = concentration_tail_mass(*density, r);
        const double bound = std::pow(r, -k0) * grid_abs_moment(*density, k0);
        CHECK(tail <= bound * (1.0 + 1e-12) + 1e-15);
      }
    }
  }
}

TEST_CASE("likelihood-ratio suprema") {
  const auto axes = centered_axes(vec1(0.0), Vec::Constant(1, 12.0), 4001);
  const GridDensity a = gaussian_on(0.0, 1.0, axes);
  const FnRatioSuprema same = fn_ratio_suprema(a, a, 3.0);
  CHECK(same.sup_plus == 0.0);
  CHECK(same.sup_minus == 0.0);

  const GridDensity b = gaussian_on(0.3, 1.2, axes);
  const FnRatioSuprema forward = fn_ratio_suprema(a, b, 3.0);
  const FnRatioSuprema swapped = fn_ratio_suprema(b, a, 3.0);
  CHECK(forward.sup_plus > 0.0);
  CHECK(std::abs(forward.sup_minus - swapped.sup_plus) <= 1e-12);
  CHECK(std::abs(forward.sup_plus - forward.sup_minus) <= 1e-12);
}

TEST_CASE("conjugate posterior ratio suprema shrink at large n") {
  const ModelSpec& model = find_model("gaussian_location");
  const Prior& prior = find_prior("std_normal");
  const int n = 10'000;
  const Dataset data = sample_data(find_process("gaussian"), n, 31);
  const Vec theta_star = Vec::Zero(1);
  const MleFit fit = fit_mle(model, data, theta_star, theta_star);
  const CurvatureEstimates curv = estimate_curvature(model, data, theta_star);
  AlphaConfig cfg;
  const GridDensity post = normalize_on_grid(model, prior, data, cfg, fit, curv);
  const GridDensity post_lan = to_lan_frame(post, theta_star, n);
  const LimitingGaussian lim = limiting_gaussian(fit, curv, 1.0, n, Frame::h);
  const GridDensity lim_lan =
      tabulate_gaussian(post_lan.axes(), lim.mean, lim.covariance, Frame::h,
                        GridDensity::Normalize::check, post_lan.lan_meta());
  const FnRatioSuprema sup = fn_ratio_suprema(post_lan, lim_lan, 3.0);
  CHECK(sup.sup_plus < 0.05);
  CHECK(sup.sup_minus < 0.05);
}

TEST_CASE("ratio suprema require positive densities on the ball") {
  auto axes = centered_axes(vec1(0.0), Vec::Constant(1, 4.0), 101);
  std::vector<double> values(101);
  for (int i = 0; i < 101; ++i) {
    const double x = axes[0][static_cast<std::size_t>(i)];
    values[static_cast<std::size_t>(i)] = -0.5 * x * x;
  }
  values[50] = -800.0;  // numerically zero density at the center
  const GridDensity broken = GridDensity::from_log_values(
      axes, values, Frame::h, GridDensity::Normalize::renormalize,
      LanMeta{Vec::Zero(1), 1.0});
  const GridDensity fine = gaussian_on(0.0, 1.0, axes);
  CHECK_THROWS_AS(fn_ratio_suprema(broken, fine, 2.0), numerical_error);
}

TEST_CASE("moment likelihood-ratio bound") {
  const auto axes = centered_axes(vec1(0.0), Vec::Constant(1, 20.0), 6001);
  const GridDensity phi = gaussian_on(0.0, 1.0, axes);
  const GridDensity psi = gaussian_on(0.3, 1.2, axes);

  // Identical densities: lhs = 0 and rhs reduces to twice the tail term.
  const BoundCheck same = moment_ratio_bound_check(phi, phi, 1, 4.0);
  CHECK(same.lhs == 0.0);
  KahanSum tail;
  phi.for_each_node([&](std::size_t flat, const Vec& h, double w) {
    if (h.norm() > 4.0) tail.add(w * h.norm() * 2.0 * phi.density(flat));
  });
  CHECK(same.rhs == doctest::Approx(tail.value()).epsilon(1e-12));

  const BoundCheck pair = moment_ratio_bound_check(phi, psi, 1, 4.0);
  CHECK(pair.lhs > 0.0);
  CHECK(pair.holds());
}

TEST_CASE("tail-moment bound") {
  const auto fine = centered_axes(vec1(0.0), Vec::Constant(1, 12.0), 240'001);
  const GridDensity g = gaussian_on(0.0, 1.0, fine);

  // k = 1, gamma = 1, r = 2: lhs = 2 phi(2), rhs = E Z^2 = 1.
  const BoundCheck spot = tail_moment_bound(g, 1, 1.0, 2.0);
  CHECK(std::abs(spot.lhs - oracles::normal_abs_tail_moment(2.0)) < 1e-4);
  CHECK(std::abs(spot.lhs - 0.1080) < 1e-4);
  CHECK(spot.rhs == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(spot.holds());

  // r beyond the grid support: both sides vanish.
  const BoundCheck far = tail_moment_bound(g, 1, 1.0, 50.0);
  CHECK(far.lhs == 0.0);
  CHECK(far.rhs < 1e-1);

  // Sample overload.
  Rng rng(7);
  std::vector<double> norms(100'000);
  for (double& v : norms) v = std::abs(rng.normal());
  const BoundCheck sampled = tail_moment_bound(norms, 1, 1.0, 2.0);
  CHECK(sampled.holds());
  CHECK(std::abs(sampled.lhs - 0.1080) < 5e-3);
}

TEST_CASE("diagnostics config validation") {
  DiagnosticsConfig cfg;
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.k = 3;
  cfg.k0 = 2;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.k = 1;
  cfg.gamma = -1.0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.gamma = 1.0;
  cfg.validate();
  CHECK(cfg.radius_for(256) == doctest::Approx(2.0).epsilon(1e-12));
}

}  // TEST_SUITE
