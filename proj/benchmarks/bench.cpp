// Microbenchmarks for the hot paths: channel construction, warping, loss and
// gradient evaluation, strain fitting, and the metric sweep.
#include <benchmark/benchmark.h>

#include "strainflow/loss.hpp"
#include "strainflow/metrics.hpp"
#include "strainflow/phantom.hpp"
#include "strainflow/signal.hpp"
#include "strainflow/solver.hpp"
#include "strainflow/strain.hpp"

using namespace strainflow;

namespace {

PhantomSpec spec_for(int rows, int cols) {
  PhantomSpec s;
  s.rows = rows;
  s.cols = cols;
  s.background_strain = 0.01;
  s.seed = 1;
  return s;
}

struct PairFixture {
  PhantomPair pair;
  MultiChannelFrame c1, c2;
  BiDisplacement fields;
  LossWeights weights;

  explicit PairFixture(int rows, int cols) {
    pair = render_pair(spec_for(rows, cols));
    c1 = build_channels(pair.i1);
    c2 = build_channels(pair.i2);
    fields.forward = pair.truth.forward;
    fields.backward = pair.truth.backward;
  }
};

const PairFixture& fixture_128x32() {
  static const PairFixture f(128, 32);
  return f;
}

const PairFixture& fixture_256x64() {
  static const PairFixture f(256, 64);
  return f;
}

}  // namespace

static void BM_BuildChannels(benchmark::State& state) {
  const PairFixture& f = fixture_256x64();
  for (auto _ : state) benchmark::DoNotOptimize(build_channels(f.pair.i1));
}
BENCHMARK(BM_BuildChannels);

static void BM_WarpImage(benchmark::State& state) {
  const PairFixture& f = fixture_256x64();
  for (auto _ : state)
    benchmark::DoNotOptimize(warp_image(f.c2.channels[0], f.fields.forward));
}
BENCHMARK(BM_WarpImage);

static void BM_TotalLoss(benchmark::State& state) {
  const PairFixture& f =
      state.range(0) == 128 ? fixture_128x32() : fixture_256x64();
  for (auto _ : state)
    benchmark::DoNotOptimize(total_loss(f.c1, f.c2, f.fields, f.weights));
}
BENCHMARK(BM_TotalLoss)->Arg(128)->Arg(256);

static void BM_TotalLossGradient(benchmark::State& state) {
  const PairFixture& f =
      state.range(0) == 128 ? fixture_128x32() : fixture_256x64();
  for (auto _ : state)
    benchmark::DoNotOptimize(total_loss_gradient(f.c1, f.c2, f.fields, f.weights));
}
BENCHMARK(BM_TotalLossGradient)->Arg(128)->Arg(256);

static void BM_LsqStrain(benchmark::State& state) {
  const PairFixture& f = fixture_256x64();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        lsq_strain(f.fields.forward.w_a, static_cast<int>(state.range(0)),
                   StrainDirection::axial));
}
BENCHMARK(BM_LsqStrain)->Arg(5)->Arg(15)->Arg(40);

static void BM_PatchSweep(benchmark::State& state) {
  const PairFixture& f = fixture_256x64();
  const RealGrid strain =
      lsq_strain(f.fields.forward.w_a, 15, StrainDirection::axial).values;
  MetricWindows w;
  w.target = {116, 20, 24, 24};
  w.background = {20, 20, 24, 24};
  for (auto _ : state) benchmark::DoNotOptimize(patch_sweep(strain, w));
}
BENCHMARK(BM_PatchSweep);

static void BM_RenderPair(benchmark::State& state) {
  const PhantomSpec s = spec_for(128, 32);
  for (auto _ : state) benchmark::DoNotOptimize(render_pair(s));
}
BENCHMARK(BM_RenderPair);

BENCHMARK_MAIN();
