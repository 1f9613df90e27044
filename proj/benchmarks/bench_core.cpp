#include <benchmark/benchmark.h>

#include "meattack/attack.hpp"
#include "meattack/estimator.hpp"
#include "meattack/motion.hpp"
#include "meattack/oracle.hpp"
#include "meattack/sampler.hpp"

using namespace meattack;

namespace {

const PatchScene& scene(std::size_t side) {
  static PatchScene s32 = make_patch_scene({12, 32, 32, 3}, 0);
  static PatchScene s112 = make_patch_scene({12, 112, 112, 3}, 0, {32, 2, 0.52, 0.5, 0.15});
  return side == 32 ? s32 : s112;
}

void BM_BlockMatching(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const BlockMatchParams params{static_cast<int>(state.range(1)), static_cast<int>(state.range(2))};
  const GrayFrame ref = to_gray(scene(side).video, 0);
  const GrayFrame cur = to_gray(scene(side).video, 1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_block_motion(ref, cur, params));
}
BENCHMARK(BM_BlockMatching)->Args({32, 4, 2})->Args({112, 16, 7})->Unit(benchmark::kMicrosecond);

void BM_OpticalFlow(benchmark::State& state) {
  const GrayFrame ref = to_gray(scene(32).video, 0);
  const GrayFrame cur = to_gray(scene(32).video, 1);
  const FlowParams params{1.0, static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(estimate_optical_flow(ref, cur, params));
}
BENCHMARK(BM_OpticalFlow)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_MotionSet(benchmark::State& state) {
  MotionParams params;
  params.block = {4, 2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_motion_set(scene(32).video, MotionRepresentation::mv, 12, params));
  }
}
BENCHMARK(BM_MotionSet)->Unit(benchmark::kMicrosecond);

void BM_MeSample(benchmark::State& state) {
  const VideoShape shape = scene(32).video.shape();
  MotionParams params;
  params.block = {4, 2};
  auto set = std::make_shared<const MotionSet>(
      build_motion_set(scene(32).video, MotionRepresentation::mv, 12, params));
  Rng rng(1);
  const NoiseTensor r = multi_noise(shape, rng);
  const MotionStack stack = sample_motion_stack(set, shape.frames, rng);
  for (auto _ : state) benchmark::DoNotOptimize(me_sample(r, stack, LookupMode::raw));
}
BENCHMARK(BM_MeSample)->Unit(benchmark::kMicrosecond);

void BM_GradEst(benchmark::State& state) {
  const VideoShape shape = scene(32).video.shape();
  MotionParams params;
  params.block = {4, 2};
  auto set = std::make_shared<const MotionSet>(
      build_motion_set(scene(32).video, MotionRepresentation::mv, 12, params));
  const PriorSampler sampler(SamplerKind::me_mv, set, LookupMode::raw);
  ToyMotionSensitive oracle(shape, scene(32).moving_mask);
  const Objective loss{LossKind::logits, 0, std::nullopt};
  EstimatorState est(shape, 10);
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_est(scene(32).video, loss, est, oracle, sampler, {}, rng));
  }
}
BENCHMARK(BM_GradEst)->Unit(benchmark::kMicrosecond);

void BM_AttackIterations(benchmark::State& state) {
  const VideoShape shape = scene(32).video.shape();
  AttackConfig cfg = AttackConfig::untargeted_defaults();
  cfg.block_size = 4;
  cfg.search_radius = 2;
  cfg.max_iters = 100;
  cfg.sampler = SamplerKind::multi_noise;
  for (auto _ : state) {
    ToyMotionSensitive oracle(shape, scene(32).moving_mask);
    benchmark::DoNotOptimize(run_attack(scene(32).video, 0, oracle, cfg));
  }
}
BENCHMARK(BM_AttackIterations)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
