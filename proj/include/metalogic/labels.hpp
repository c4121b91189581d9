#pragma once

// English noun handling shared by prompt rendering and label normalization.

#include <map>
#include <string>
#include <string_view>

namespace metalogic {

/// "an" before a vowel-initial label, else "a".
std::string_view indefinite_article(std::string_view label);

/// "one".."ten"; throws Error(count_out_of_range) outside [1,10].
std::string_view number_word(int n);

/// Plural of the last word of a (possibly multi-word) label.
std::string pluralize(std::string_view label);

/// Inverse of pluralize for regular and listed irregular nouns. Words that
/// only look plural ("bus", "glass", "species") are left alone.
std::string singularize(std::string_view label);

/// Detector label -> canonical label: lowercase, trimmed, single-spaced,
/// singularized, then mapped through the synonym table.
class LabelNormalizer {
 public:
  /// Uses the default synonym table (see default_synonyms()).
  LabelNormalizer();
  explicit LabelNormalizer(std::map<std::string, std::string> synonyms);

  std::string normalize(std::string_view raw) const;
  const std::map<std::string, std::string>& synonyms() const noexcept { return synonyms_; }

 private:
  std::map<std::string, std::string> synonyms_;
};

/// puppy/doggy/hound -> dog, kitten/kitty -> cat, calf/cattle/bull/ox -> cow.
const std::map<std::string, std::string>& default_synonyms();

}  // namespace metalogic
