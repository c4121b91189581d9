#include "metalogic/classifier.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace metalogic {

namespace {

std::set<std::string> words(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}

}  // namespace

double ocr_coverage(const DetectionResult& det) {
  if (det.ocr_regions.empty() || det.width <= 0 || det.height <= 0) return 0.0;
  std::vector<double> xs, ys;
  for (const auto& o : det.ocr_regions) {
    xs.push_back(o.bbox.x1);
    xs.push_back(o.bbox.x2);
    ys.push_back(o.bbox.y1);
    ys.push_back(o.bbox.y2);
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  // Union area over the compressed grid.
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double mx = (xs[i] + xs[i + 1]) / 2, my = (ys[j] + ys[j + 1]) / 2;
      for (const auto& o : det.ocr_regions) {
        if (mx > o.bbox.x1 && mx < o.bbox.x2 && my > o.bbox.y1 && my < o.bbox.y2) {
          area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
          break;
        }
      }
    }
  }
  return area / (static_cast<double>(det.width) * det.height);
}

int ocr_prompt_word_hits(const DetectionResult& det, std::string_view prompt) {
  const auto vocab = words(prompt);
  std::set<std::string> seen;
  for (const auto& o : det.ocr_regions) {
    for (auto& w : words(o.text)) {
      if (vocab.contains(w)) seen.insert(w);
    }
  }
  return static_cast<int>(seen.size());
}

bool is_optical_fallback(const DetectionResult& det, std::string_view prompt,
                         const ClassifierConfig& config) {
  if (det.ocr_regions.empty()) return false;
  return ocr_coverage(det) > config.ocr_area_fraction ||
         ocr_prompt_word_hits(det, prompt) >= config.ocr_prompt_words;
}

std::vector<ErrorCategory> classify(const Verdict& verdict, const DetectionResult& a,
                                    const DetectionResult& b, const TestCase& tc,
                                    const ClassifierConfig& config) {
  std::vector<ErrorCategory> out;
  if (verdict.aligned) return out;
  const bool ocr_a = is_optical_fallback(a, tc.prompt_a, config);
  const bool ocr_b = is_optical_fallback(b, tc.prompt_b, config);
  bool omission = false, duplication = false;
  for (const auto& [label, counts] : verdict.presence_diff) {
    auto it = tc.scene.expected_entities.find(label);
    if (it == tc.scene.expected_entities.end()) continue;
    const int expected = it->second;
    if ((counts.first < expected && !ocr_a) || (counts.second < expected && !ocr_b)) {
      omission = true;
    }
    if (counts.first > expected || counts.second > expected) duplication = true;
  }
  if (ocr_a || ocr_b) out.push_back(ErrorCategory::optical_character);
  if (omission) out.push_back(ErrorCategory::entity_omission);
  if (duplication) out.push_back(ErrorCategory::entity_duplication);
  if (!verdict.position_diff.empty() && tc.scene.axis) {
    out.push_back(*tc.scene.axis == Axis::x ? ErrorCategory::x_misposition
                                            : ErrorCategory::y_misposition);
  }
  return out;
}

Verdict judge_pair(const TestCase& tc, const DetectionResult& a, const DetectionResult& b,
                   const ComparatorConfig& comparator, const ClassifierConfig& classifier) {
  Verdict v = compare_pair(tc, a, b, comparator);
  v.categories = classify(v, a, b, tc, classifier);
  v.uncategorized = !v.aligned && v.categories.empty();
  if (is_optical_fallback(a, tc.prompt_a, classifier)) v.notes.push_back("side a rendered as text");
  if (is_optical_fallback(b, tc.prompt_b, classifier)) v.notes.push_back("side b rendered as text");
  return v;
}

}  // namespace metalogic
