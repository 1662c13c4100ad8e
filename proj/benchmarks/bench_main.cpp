#include <benchmark/benchmark.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "qwlab/control.hpp"
#include "qwlab/numcore.hpp"
#include "qwlab/tmrecon.hpp"
#include "qwlab/ttm.hpp"
#include "qwlab/virtlab.hpp"

using namespace qwlab;

namespace {

FiberConfig small_fiber() {
  FiberConfig f;
  f.n_in_h = 60;
  f.n_in_v = 60;
  f.n_out = 40;
  f.seed = 3;
  return f;
}

FiberConfig desk_fiber() {
  FiberConfig f;  // defaults: 180 + 190 inputs, 100 outputs
  f.seed = 3;
  return f;
}

void bm_haar_unitary(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    UnitaryMatrix u = haar_unitary(dim, seed++);
    benchmark::DoNotOptimize(u.m(0, 0));
  }
}
BENCHMARK(bm_haar_unitary)->Arg(64)->Arg(256)->Arg(470);

void bm_fiber_sample(benchmark::State& state) {
  FiberConfig cfg = desk_fiber();
  for (auto _ : state) {
    GroundTruthFiber fiber = GroundTruthFiber::sample(cfg);
    benchmark::DoNotOptimize(fiber.t_true(0, 0));
    ++cfg.seed;
  }
}
BENCHMARK(bm_fiber_sample);

void bm_measure_tm(benchmark::State& state) {
  LabState lab(small_fiber(), SourceModel{}, DetectorModel{});
  for (auto _ : state) {
    ReconstructedTM recon = measure_tm(lab, TmMeasureOptions{});
    benchmark::DoNotOptimize(recon.tm.m(0, 0));
  }
}
BENCHMARK(bm_measure_tm);

void bm_ttm_block(benchmark::State& state) {
  LabState lab(desk_fiber(), SourceModel{}, DetectorModel{});
  TransmissionMatrix tm = lab.true_transmission_matrix();
  std::vector<TwoPhotonInput> inputs;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      CVec u = CVec::Zero(tm.n_in_h);
      CVec v = CVec::Zero(tm.n_in_v());
      u[i] = Cx(1.0, 0.0);
      v[j] = Cx(1.0, 0.0);
      inputs.emplace_back(u, v);
    }
  }
  std::vector<std::pair<int, int>> pairs = {{22, 72}, {22, 77}, {27, 72},
                                            {27, 77}};
  for (auto _ : state) {
    TtmBlock block = build_ttm_block(tm, inputs, pairs, 0.86);
    benchmark::DoNotOptimize(block.rates(0, 0));
  }
}
BENCHMARK(bm_ttm_block);

void bm_coincidence_counting(benchmark::State& state) {
  LabState lab(desk_fiber(), SourceModel{}, DetectorModel{});
  for (auto _ : state) {
    CoincidenceResult r = lab.count_coincidences(22, 77, 290.0);
    benchmark::DoNotOptimize(r.rate);
  }
}
BENCHMARK(bm_coincidence_counting);

void bm_superposition_masks(benchmark::State& state) {
  LabState lab(desk_fiber(), SourceModel{}, DetectorModel{});
  TransmissionMatrix tm = lab.true_transmission_matrix().row_normalized();
  SuperpositionTarget target;
  target.x = 22;
  target.y = 77;
  for (auto _ : state) {
    auto masks = superposition_masks(tm, target);
    benchmark::DoNotOptimize(masks.first.phases[0]);
  }
}
BENCHMARK(bm_superposition_masks);

void bm_fit_phase_law(benchmark::State& state) {
  const int n = 8;
  std::vector<double> phases;
  for (int i = 0; i < n; ++i) phases.push_back(kTwoPi * i / n);
  RMat grid(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      grid(a, b) = 0.8 * std::cos(phases[a] - phases[b] + 0.1);
  for (auto _ : state) {
    CosineFit fit = fit_phase_law(grid, phases, phases);
    benchmark::DoNotOptimize(fit.amplitude);
  }
}
BENCHMARK(bm_fit_phase_law);

}  // namespace

BENCHMARK_MAIN();
