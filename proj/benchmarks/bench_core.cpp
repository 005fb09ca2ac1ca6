#include <benchmark/benchmark.h>

#include "uscx/gev.hpp"
#include "uscx/grid.hpp"
#include "uscx/maxstable.hpp"
#include "uscx/rng.hpp"
#include "uscx/transform.hpp"

namespace {

uscx::GridField make_field(const uscx::Domain& d, std::uint64_t seed) {
  uscx::Rng rng(seed);
  uscx::GridField f(d);
  for (auto& v : f.values) v = uscx::ExtReal(rng.uniform(-5.0, 5.0));
  return f;
}

void BM_pointwise_max_2d(benchmark::State& state) {
  auto d = uscx::Domain::make2d(0.0, 1.0, 128, 0.0, 1.0, 128);
  auto a = make_field(d, 1);
  auto b = make_field(d, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(uscx::pointwise_max(a, b));
  }
}
BENCHMARK(BM_pointwise_max_2d);

void BM_usc_hull_2d(benchmark::State& state) {
  auto d = uscx::Domain::make2d(0.0, 1.0, 128, 0.0, 1.0, 128);
  auto a = make_field(d, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(uscx::usc_hull_grid(a));
  }
}
BENCHMARK(BM_usc_hull_2d);

void BM_hypo_hits(benchmark::State& state) {
  auto d = uscx::Domain::make2d(0.0, 1.0, 128, 0.0, 1.0, 128);
  auto a = make_field(d, 4);
  uscx::CompactProbe probe{{{uscx::Box::rect(0.2, 0.8, 0.2, 0.8), 4.9}}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(uscx::hypo_hits(a, probe));
  }
}
BENCHMARK(BM_hypo_hits);

void BM_gev_quantile(benchmark::State& state) {
  const uscx::GevParams theta(0.3, 1.0, 2.0);
  double p = 0.0;
  for (auto _ : state) {
    p += 1e-7;
    benchmark::DoNotOptimize(uscx::gev_quantile(0.1 + p, theta));
  }
}
BENCHMARK(BM_gev_quantile);

void BM_gev_standardize_field(benchmark::State& state) {
  const auto d = uscx::Domain::make1d(0.0, 1.0, 257);
  const auto theta = uscx::ThetaField::affine(d, uscx::GevParams(0.2, 0.0, 1.0),
                                              {0.6, 0.0}, {0.5, 0.0}, {0.5, 0.0});
  uscx::GridField f(d);
  uscx::Rng rng(5);
  for (auto& v : f.values) v = uscx::ExtReal(rng.uniform(0.5, 10.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(uscx::gev_standardize(theta, f));
  }
}
BENCHMARK(BM_gev_standardize_field);

void BM_transform_apply(benchmark::State& state) {
  const auto d = uscx::Domain::make1d(0.0, 1.0, 257);
  const auto map =
      uscx::compose(uscx::PointwiseMap::scale(uscx::Expr::constant(uscx::ExtReal(2.0))),
                    uscx::PointwiseMap::shift(uscx::Expr::coord()));
  auto f = make_field(d, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(uscx::apply(map, f));
  }
}
BENCHMARK(BM_transform_apply);

void BM_simulate_storm(benchmark::State& state) {
  const auto d = uscx::Domain::make1d(0.0, 1.0, 33);
  const uscx::MaxStableSampler sampler(uscx::SpectralModel::storm(d, 0.25, 2.0), 0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(uscx::simulate_simple(sampler, ++seed));
  }
}
BENCHMARK(BM_simulate_storm);

void BM_capacity_empirical(benchmark::State& state) {
  const auto d = uscx::Domain::make1d(0.0, 1.0, 33);
  const uscx::MaxStableSampler sampler(uscx::SpectralModel::storm(d, 0.25, 2.0), 0);
  const uscx::CompactProbe probe{{{uscx::Box::interval(0.25, 0.75), 1.5}}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(uscx::capacity_empirical(sampler, probe, 200, 7));
  }
}
BENCHMARK(BM_capacity_empirical);

}  // namespace

BENCHMARK_MAIN();
