#pragma once

#include <string_view>
#include <vector>

#include "metalogic/comparator.hpp"

namespace metalogic {

/// Heuristic thresholds for automated error labeling.
struct ClassifierConfig {
  /// OCR regions covering more than this fraction of the image.
  double ocr_area_fraction = 0.05;
  /// ...or containing at least this many words of the image's prompt.
  int ocr_prompt_words = 4;
};

/// Fraction of the image area covered by the union of OCR boxes.
double ocr_coverage(const DetectionResult& det);

/// Distinct OCR words (case-folded, alphanumeric runs) that occur in `prompt`.
int ocr_prompt_word_hits(const DetectionResult& det, std::string_view prompt);

bool is_optical_fallback(const DetectionResult& det, std::string_view prompt,
                         const ClassifierConfig& config = {});

/// Categories in a fixed order: optical_character, entity_omission,
/// entity_duplication, x/y_misposition. Aligned verdicts get none.
std::vector<ErrorCategory> classify(const Verdict& verdict, const DetectionResult& a,
                                    const DetectionResult& b, const TestCase& tc,
                                    const ClassifierConfig& config = {});

/// compare_pair + classify, with `uncategorized` set when needed.
Verdict judge_pair(const TestCase& tc, const DetectionResult& a, const DetectionResult& b,
                   const ComparatorConfig& comparator = {},
                   const ClassifierConfig& classifier = {});

}  // namespace metalogic
