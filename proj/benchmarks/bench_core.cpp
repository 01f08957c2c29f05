#include <benchmark/benchmark.h>

#include "powerpost/diagnostics.hpp"
#include "powerpost/families.hpp"
#include "powerpost/posterior.hpp"

namespace {

using namespace powerpost;

struct Fixture {
  const ModelSpec& model = find_model("gaussian_location");
  const TrueProcess& process = find_process("gaussian");
  const Prior& prior = find_prior("gaussian_wide");
};

void BM_FitMle(benchmark::State& state) {
  Fixture fx;
  const Dataset data = sample_data(fx.process, static_cast<int>(state.range(0)), 7);
  const Vec start = Vec::Zero(1);
  for (auto _ : state) {
    MleFit fit = fit_mle(fx.model, data, start);
    benchmark::DoNotOptimize(fit.theta_hat);
  }
}
BENCHMARK(BM_FitMle)->Arg(200)->Arg(2000);

void BM_GridPosterior(benchmark::State& state) {
  Fixture fx;
  const Dataset data = sample_data(fx.process, static_cast<int>(state.range(0)), 7);
  const MleFit fit = fit_mle(fx.model, data, Vec::Zero(1));
  const CurvatureEstimates curv = estimate_curvature(fx.model, data, fit.theta_hat);
  AlphaConfig cfg;
  for (auto _ : state) {
    GridDensity post = normalize_on_grid(fx.model, fx.prior, data, cfg, fit, curv);
    benchmark::DoNotOptimize(post.log_values().data());
  }
}
BENCHMARK(BM_GridPosterior)->Arg(200)->Arg(2000);

void BM_WeightedL1(benchmark::State& state) {
  const auto axes = centered_axes(Vec::Zero(1), Vec::Constant(1, 12.0), 4001);
  const GridDensity a = tabulate_gaussian(axes, Vec::Zero(1), Mat::Identity(1, 1),
                                          Frame::h, GridDensity::Normalize::check,
                                          LanMeta{Vec::Zero(1), 1.0});
  Vec shifted = Vec::Constant(1, 0.2);
  const GridDensity b = tabulate_gaussian(axes, shifted, Mat::Identity(1, 1),
                                          Frame::h, GridDensity::Normalize::check,
                                          LanMeta{Vec::Zero(1), 1.0});
  for (auto _ : state) {
    WeightedL1 wl = weighted_l1_distance(a, b, 2);
    benchmark::DoNotOptimize(wl.z0);
  }
}
BENCHMARK(BM_WeightedL1);

void BM_TvDistance(benchmark::State& state) {
  const auto axes = centered_axes(Vec::Zero(1), Vec::Constant(1, 12.0), 4001);
  const GridDensity a = tabulate_gaussian(axes, Vec::Zero(1), Mat::Identity(1, 1),
                                          Frame::theta);
  Vec shifted = Vec::Constant(1, 0.5);
  const GridDensity b = tabulate_gaussian(axes, shifted, Mat::Identity(1, 1),
                                          Frame::theta);
  for (auto _ : state) {
    double tv = tv_distance(a, b);
    benchmark::DoNotOptimize(tv);
  }
}
BENCHMARK(BM_TvDistance);

void BM_MetropolisChain(benchmark::State& state) {
  Fixture fx;
  const Dataset data = sample_data(fx.process, 200, 7);
  AlphaConfig cfg;
  for (auto _ : state) {
    auto chain = sample_posterior(fx.model, fx.prior, data, cfg, 10'000, 5);
    benchmark::DoNotOptimize(chain.data());
  }
}
BENCHMARK(BM_MetropolisChain);

}  // namespace

BENCHMARK_MAIN();
