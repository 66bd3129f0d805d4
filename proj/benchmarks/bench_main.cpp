// Copyright 2026 The ctxreject Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>

#include "ctxreject/classifier.hpp"
#include "ctxreject/inference.hpp"
#include "ctxreject/maxflow.hpp"
#include "ctxreject/pipeline.hpp"
#include "ctxreject/segmentation.hpp"

using namespace ctxreject;

namespace {

const SyntheticScene& scene256() {
  static const SyntheticScene s = make_synthetic(256, 256, 3, 0.15, 1);
  return s;
}

PipelineConfig bench_config() {
  PipelineConfig cfg;
  cfg.lambda = 0.03;
  cfg.gamma = 0.003;
  cfg.seg_k = 0.1;
  cfg.mss_list = {64, 128, 256, 512};
  return cfg;
}

void BM_Oversegment(benchmark::State& state) {
  const int mss = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(oversegment(scene256().image, {0.1, 0.8}, mss));
}
BENCHMARK(BM_Oversegment)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_MultiscalePartition(benchmark::State& state) {
  const std::vector<int> mss{64, 128, 256, 512, 1024, 2048};
  for (auto _ : state)
    benchmark::DoNotOptimize(multiscale_partition(scene256().image, {0.1, 0.8}, mss));
}
BENCHMARK(BM_MultiscalePartition)->Unit(benchmark::kMillisecond);

void BM_MaxFlowGrid(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> caps(static_cast<size_t>(side) * side * 4);
  for (auto& c : caps) c = u(rng);
  for (auto _ : state) {
    const int n = side * side;
    MaxFlow mf(n + 2);
    size_t k = 0;
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const int v = y * side + x;
        mf.add_edge(n, v, caps[k++]);
        mf.add_edge(v, n + 1, caps[k++]);
        if (x + 1 < side) mf.add_edge(v, v + 1, caps[k], caps[k]);
        ++k;
        if (y + 1 < side) mf.add_edge(v, v + side, caps[k], caps[k]);
        ++k;
      }
    benchmark::DoNotOptimize(mf.solve(n, n + 1));
  }
}
BENCHMARK(BM_MaxFlowGrid)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_AlphaExpansion(benchmark::State& state) {
  const PipelineConfig cfg = bench_config();
  const Scene scene = build_scene(scene256().image, cfg);
  const TrainingSpec spec = random_training_spec(scene.partitions[0], scene256().truth, 10, 1);
  const TrainingSet ts = training_set_from_spec(scene, spec, 3);
  const TrainedModel model = train_and_predict(scene, ts, cfg);
  const LabelSet labels(3);
  for (auto _ : state)
    benchmark::DoNotOptimize(infer_labels(scene, model.posteriors, labels, cfg));
  state.counters["nodes"] = scene.graph.num_nodes();
}
BENCHMARK(BM_AlphaExpansion)->Unit(benchmark::kMillisecond);

void BM_LorsalTrain(benchmark::State& state) {
  const int per_class = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.1);
  TrainingSet ts;
  ts.num_classes = 3;
  ts.features.resize(3 * per_class, 3);
  for (int i = 0; i < 3 * per_class; ++i) {
    const int c = i % 3;
    for (int d = 0; d < 3; ++d) ts.features(i, d) = (d == c ? 0.7 : 0.3) + g(rng);
    ts.labels.push_back(c);
    ts.indices.push_back(i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(lorsal_train(ts, 0.3, {0.03}));
}
BENCHMARK(BM_LorsalTrain)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  const PipelineConfig cfg = bench_config();
  const Partition finest = oversegment(scene256().image, {cfg.seg_k, cfg.seg_sigma}, 64);
  const TrainingSpec spec = random_training_spec(finest, scene256().truth, 10, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(run_pipeline(cfg, scene256().image, scene256().truth, spec));
}
BENCHMARK(BM_Pipeline)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
