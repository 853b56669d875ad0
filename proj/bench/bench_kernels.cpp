// Serial-reference vs OpenMP comparison for the data-parallel kernels:
// transmission sampling, per-bin fading key rates, the dual-channel
// entanglement grid and the non-Gaussian loss pipeline.

#include <benchmark/benchmark.h>

#include "cvsat/atmosphere.hpp"
#include "cvsat/parallel.hpp"
#include "cvsat/qkd.hpp"

using namespace cvsat;

namespace {

const BeamWanderParams kWander{0.7, 1.0, 0.8, 0.0};

ProtocolConfig protocol() {
  return {StateType::coherent, Detection::homodyne, Reconciliation::reverse, 1.0};
}

FadingOptions options_for(parallel::Policy policy, int bins) {
  FadingOptions options;
  options.bins = bins;
  options.policy = policy;
  return options;
}

void BM_SampleTransmission(benchmark::State& state, parallel::Policy policy) {
  for (auto _ : state) {
    auto samples = sample_transmission(42, 200000, kWander, 0, policy);
    benchmark::DoNotOptimize(samples.data());
  }
}

void BM_KeyrateFading(benchmark::State& state, parallel::Policy policy) {
  FadingDistribution dist = FadingDistribution::parametric(kWander);
  for (auto _ : state) {
    RateResult rate = keyrate_fading(12.0, dist, 1.05, protocol(),
                                     FadingScenario::per_eta, 0.0,
                                     options_for(policy, 200));
    benchmark::DoNotOptimize(rate.key_rate);
  }
}

void BM_DualEntanglement(benchmark::State& state, parallel::Policy policy) {
  FadingDistribution dist = FadingDistribution::parametric(kWander);
  for (auto _ : state) {
    double e = entanglement_fading_dual(std::cosh(1.0), dist, dist, 1.0,
                                        EntanglementMeasure::log_negativity,
                                        FadingScenario::per_eta,
                                        options_for(policy, 40));
    benchmark::DoNotOptimize(e);
  }
}

void BM_NonGaussKeyrate(benchmark::State& state, parallel::Policy policy) {
  NonGaussSource source;
  source.r = 0.3;
  source.cutoff = 12;
  source.op = NonGaussianKind::subtract;
  source.op_options.bs_tau = 0.9;
  FadingDistribution dist = FadingDistribution::parametric(kWander);
  for (auto _ : state) {
    RateResult rate = nongauss_keyrate(source, dist, 1.0, protocol(),
                                       options_for(policy, 48));
    benchmark::DoNotOptimize(rate.key_rate);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_SampleTransmission, serial, parallel::Policy::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SampleTransmission, openmp, parallel::Policy::openmp)
    ->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_KeyrateFading, serial, parallel::Policy::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_KeyrateFading, openmp, parallel::Policy::openmp)
    ->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_DualEntanglement, serial, parallel::Policy::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_DualEntanglement, openmp, parallel::Policy::openmp)
    ->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_NonGaussKeyrate, serial, parallel::Policy::serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_NonGaussKeyrate, openmp, parallel::Policy::openmp)
    ->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
