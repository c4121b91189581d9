#include <benchmark/benchmark.h>

#include "metalogic/kernels.hpp"

using namespace metalogic;

namespace {

const std::vector<TestCase>& cases() {
  static const auto c = generate_suite(SuiteConfig{});
  return c;
}

FailureConfig noisy() {
  FailureConfig f;
  f.p_omit = 0.2;
  f.p_duplicate = 0.1;
  f.p_swap_position = 0.1;
  f.p_text_fallback = 0.05;
  f.seed = 3;
  return f;
}

struct Batch {
  std::vector<DetectionResult> dets;
  std::vector<PairInput> pairs;
};

const Batch& batch() {
  static const Batch b = [] {
    Batch out;
    const auto f = noisy();
    for (const auto& tc : cases()) {
      for (Side s : {Side::a, Side::b}) {
        Rng rng = mock_rng(f, "bench", tc.case_id, s);
        const auto sc =
            synthesize_scene(tc.scene, f, s, rng, s == Side::a ? tc.prompt_a : tc.prompt_b);
        DetectionResult d;
        d.width = sc.width;
        d.height = sc.height;
        d.detections = sc.detections;
        d.ocr_regions = sc.ocr_regions;
        out.dets.push_back(std::move(d));
      }
    }
    for (std::size_t i = 0; i < cases().size(); ++i) {
      out.pairs.push_back({&cases()[i], &out.dets[2 * i], &out.dets[2 * i + 1]});
    }
    return out;
  }();
  return b;
}

const std::vector<std::string> kVocab = {"cat", "dog", "apple", "banana", "cow"};

}  // namespace

static void BM_JudgeBatchSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(judge_batch_serial(batch().pairs));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(batch().pairs.size()));
}
BENCHMARK(BM_JudgeBatchSerial)->Unit(benchmark::kMillisecond);

static void BM_JudgeBatch(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(judge_batch(batch().pairs));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(batch().pairs.size()));
}
BENCHMARK(BM_JudgeBatch)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_SimulateSerial(benchmark::State& st) {
  const int reps = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(simulate_mock_pairs_serial(cases(), noisy(), "b", reps));
  st.SetItemsProcessed(st.iterations() * reps * static_cast<long>(cases().size()));
}
BENCHMARK(BM_SimulateSerial)->Arg(1)->Arg(7)->Unit(benchmark::kMillisecond);

static void BM_Simulate(benchmark::State& st) {
  const int reps = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(simulate_mock_pairs(cases(), noisy(), "b", reps));
  st.SetItemsProcessed(st.iterations() * reps * static_cast<long>(cases().size()));
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(7)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_RegistrySoundnessSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(registry_soundness_serial(template_registry(), kVocab));
}
BENCHMARK(BM_RegistrySoundnessSerial)->Unit(benchmark::kMillisecond);

static void BM_RegistrySoundness(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(registry_soundness(template_registry(), kVocab));
}
BENCHMARK(BM_RegistrySoundness)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
