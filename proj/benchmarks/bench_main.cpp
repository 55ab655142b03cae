#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "omtherm/detection.hpp"
#include "omtherm/filter.hpp"
#include "omtherm/likelihood.hpp"
#include "omtherm/mcmc.hpp"
#include "omtherm/pulse_fit.hpp"

using namespace omtherm;

namespace {

constexpr double kDt = 2e-9;
constexpr double kT0 = -50e-9;
constexpr std::size_t kBins = 175;

PulseModelSpec pulse_spec() {
  PulseModelSpec spec;
  spec.stack = FilterStack::narrowband_pair();
  spec.gamma_cal = 21.1;
  spec.nc_peak = 128.0;
  spec.nc_envelope = SampledWaveform::sample(kT0, kDt, kBins, [](double t) { return t >= 0.0 ? 1.0 : 0.0; });
  spec.t_start = 0.0;
  return spec;
}

const PulseParameters kTruth{0.42, 1.25, 100e-9, 0.0026, 530e3};

void BM_Transmit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  PulseFilter filter(FilterStack::narrowband_pair(), kDt, n);
  std::vector<double> in(n, 0.0), out(n);
  for (std::size_t i = n / 4; i < n / 2; ++i) in[i] = 1.0;
  for (auto _ : state) {
    filter.transmit(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Transmit)->Arg(175)->Arg(1024)->Arg(8192);

void BM_PulseLikelihood(benchmark::State& state) {
  const PulseForwardModel model(pulse_spec());
  PulseFilter filter = model.make_filter();
  SimulationOptions so;
  so.seed = 1;
  const auto data = simulate_clicks(model.rate(kTruth), kT0, kDt, 10'000'000, so);
  std::vector<double> lambda(kBins);
  for (auto _ : state) {
    model.rate(kTruth, filter, lambda);
    for (double& v : lambda) v *= data.exposure();
    benchmark::DoNotOptimize(poisson_log_likelihood(lambda, data));
  }
}
BENCHMARK(BM_PulseLikelihood);

void BM_SimulateClicks(benchmark::State& state) {
  const PulseForwardModel model(pulse_spec());
  const auto rates = model.rate(kTruth);
  SimulationOptions so;
  for (auto _ : state) {
    so.seed++;
    benchmark::DoNotOptimize(simulate_clicks(rates, kT0, kDt, static_cast<std::uint64_t>(state.range(0)), so));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateClicks)->Arg(100'000)->Arg(10'000'000);

// One ensemble update of 32 walkers on a 4-d Gaussian, amortized over 200 steps.
void BM_McmcStep(benchmark::State& state) {
  PriorSpec prior;
  for (const char* name : {"a", "b", "c", "d"}) prior.params.push_back({name, -10.0, 10.0});
  const LogDensity target = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return -0.5 * s;
  };
  McmcOptions opt;
  opt.walkers = 32;
  opt.steps = 200;
  opt.threads = 1;
  for (auto _ : state) {
    opt.seed++;
    benchmark::DoNotOptimize(ensemble_mcmc(target, prior, opt));
  }
  state.SetItemsProcessed(state.iterations() * opt.steps);
}
BENCHMARK(BM_McmcStep);

}  // namespace
BENCHMARK_MAIN();
