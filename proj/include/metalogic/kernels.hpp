#pragma once

// Batch kernels. Each OpenMP version has a serial reference with identical
// results; tests compare the two and bench/ times them.

#include <span>
#include <string_view>
#include <vector>

#include "metalogic/backends.hpp"
#include "metalogic/classifier.hpp"
#include "metalogic/suite.hpp"
#include "metalogic/templates.hpp"

namespace metalogic {

struct PairInput {
  const TestCase* tc = nullptr;
  const DetectionResult* a = nullptr;
  const DetectionResult* b = nullptr;
};

std::vector<Verdict> judge_batch_serial(std::span<const PairInput> pairs,
                                        const ComparatorConfig& comparator = {},
                                        const ClassifierConfig& classifier = {});
std::vector<Verdict> judge_batch(std::span<const PairInput> pairs,
                                 const ComparatorConfig& comparator = {},
                                 const ClassifierConfig& classifier = {});

/// Failure seed of one replicate; replicate 0 keeps the configured seed.
FailureConfig replicate_failures(const FailureConfig& failures, int replicate);

/// In-memory mock runs: both scenes synthesized from the same RNG streams the
/// mock generator uses, then judged. Output order is replicate-major, then
/// case order.
std::vector<Verdict> simulate_mock_pairs_serial(std::span<const TestCase> cases,
                                                const FailureConfig& failures,
                                                std::string_view model, int replicates,
                                                const ComparatorConfig& comparator = {},
                                                const ClassifierConfig& classifier = {});
std::vector<Verdict> simulate_mock_pairs(std::span<const TestCase> cases,
                                         const FailureConfig& failures, std::string_view model,
                                         int replicates, const ComparatorConfig& comparator = {},
                                         const ClassifierConfig& classifier = {});

/// Per template: true when formula_a and formula_b are equivalent for every
/// ordered entity tuple drawn from `vocabulary`. Numbering templates are
/// checked with their bound entity in slot e2.
std::vector<char> registry_soundness_serial(std::span<const TemplatePair> templates,
                                            std::span<const std::string> vocabulary);
std::vector<char> registry_soundness(std::span<const TemplatePair> templates,
                                     std::span<const std::string> vocabulary);

}  // namespace metalogic
