#include "metalogic/kernels.hpp"

#include <omp.h>

#include "metalogic/logic.hpp"

namespace metalogic {

std::vector<Verdict> judge_batch_serial(std::span<const PairInput> pairs,
                                        const ComparatorConfig& comparator,
                                        const ClassifierConfig& classifier) {
  std::vector<Verdict> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(judge_pair(*p.tc, *p.a, *p.b, comparator, classifier));
  return out;
}

std::vector<Verdict> judge_batch(std::span<const PairInput> pairs,
                                 const ComparatorConfig& comparator,
                                 const ClassifierConfig& classifier) {
  std::vector<Verdict> out(pairs.size());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& p = pairs[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = judge_pair(*p.tc, *p.a, *p.b, comparator, classifier);
    } catch (...) {
#pragma omp critical(metalogic_judge_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

FailureConfig replicate_failures(const FailureConfig& failures, int replicate) {
  FailureConfig f = failures;
  if (replicate > 0) f.seed = derive_seed(failures.seed, "replicate-" + std::to_string(replicate));
  return f;
}

namespace {

Verdict simulate_one(const TestCase& tc, const FailureConfig& f, std::string_view model,
                     const ComparatorConfig& comparator, const ClassifierConfig& classifier) {
  DetectionResult det[2];
  const Side sides[2] = {Side::a, Side::b};
  for (int s = 0; s < 2; ++s) {
    Rng rng = mock_rng(f, model, tc.case_id, sides[s]);
    auto scene = synthesize_scene(tc.scene, f, sides[s], rng, s == 0 ? tc.prompt_a : tc.prompt_b);
    det[s].image.case_id = tc.case_id;
    det[s].image.side = sides[s];
    det[s].detections = std::move(scene.detections);
    det[s].ocr_regions = std::move(scene.ocr_regions);
    det[s].width = scene.width;
    det[s].height = scene.height;
  }
  return judge_pair(tc, det[0], det[1], comparator, classifier);
}

}  // namespace

std::vector<Verdict> simulate_mock_pairs_serial(std::span<const TestCase> cases,
                                                const FailureConfig& failures,
                                                std::string_view model, int replicates,
                                                const ComparatorConfig& comparator,
                                                const ClassifierConfig& classifier) {
  std::vector<Verdict> out;
  out.reserve(cases.size() * static_cast<std::size_t>(std::max(replicates, 0)));
  for (int r = 0; r < replicates; ++r) {
    const FailureConfig f = replicate_failures(failures, r);
    for (const auto& tc : cases) out.push_back(simulate_one(tc, f, model, comparator, classifier));
  }
  return out;
}

std::vector<Verdict> simulate_mock_pairs(std::span<const TestCase> cases,
                                         const FailureConfig& failures, std::string_view model,
                                         int replicates, const ComparatorConfig& comparator,
                                         const ClassifierConfig& classifier) {
  const std::size_t per = cases.size();
  const auto total = static_cast<std::ptrdiff_t>(per * static_cast<std::size_t>(std::max(replicates, 0)));
  std::vector<Verdict> out(static_cast<std::size_t>(total));
  std::vector<FailureConfig> seeds;
  for (int r = 0; r < replicates; ++r) seeds.push_back(replicate_failures(failures, r));
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = simulate_one(cases[k % per], seeds[k / per], model, comparator, classifier);
  }
  return out;
}

namespace {

std::vector<std::vector<std::string>> tuples_for(const TemplatePair& tp,
                                                 std::span<const std::string> vocabulary) {
  if (!tp.numbered_entity) return entity_combinations(vocabulary, tp.slots);
  std::vector<std::vector<std::string>> out;
  for (const auto& v : vocabulary) {
    if (v != *tp.numbered_entity) out.push_back({v, *tp.numbered_entity});
  }
  return out;
}

}  // namespace

std::vector<char> registry_soundness_serial(std::span<const TemplatePair> templates,
                                            std::span<const std::string> vocabulary) {
  std::vector<char> out;
  for (const auto& tp : templates) {
    bool ok = true;
    for (const auto& t : tuples_for(tp, vocabulary)) {
      const auto [fa, fb] = instantiate(tp, t);
      ok = ok && equivalent_reference(fa, fb);
    }
    out.push_back(ok);
  }
  return out;
}

std::vector<char> registry_soundness(std::span<const TemplatePair> templates,
                                     std::span<const std::string> vocabulary) {
  struct Item {
    std::size_t tmpl;
    std::vector<std::string> tuple;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    for (auto& t : tuples_for(templates[i], vocabulary)) items.push_back({i, std::move(t)});
  }
  std::vector<char> ok_item(items.size(), 0);
  const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& it = items[static_cast<std::size_t>(i)];
    const auto [fa, fb] = instantiate(templates[it.tmpl], it.tuple);
    ok_item[static_cast<std::size_t>(i)] = equivalent(fa, fb);
  }
  std::vector<char> out(templates.size(), 1);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!ok_item[i]) out[items[i].tmpl] = 0;
  }
  return out;
}

}  // namespace metalogic
