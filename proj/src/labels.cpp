#include "metalogic/labels.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "metalogic/errors.hpp"

namespace metalogic {

namespace {

constexpr std::array<std::string_view, 10> kNumberWords = {
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};

// singular -> plural
const std::map<std::string, std::string, std::less<>>& irregular_plurals() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"child", "children"}, {"foot", "feet"},     {"goose", "geese"},
      {"man", "men"},        {"mouse", "mice"},    {"ox", "oxen"},
      {"person", "people"},  {"tooth", "teeth"},   {"woman", "women"},
      {"knife", "knives"},   {"leaf", "leaves"},   {"wolf", "wolves"},
      {"calf", "calves"},    {"loaf", "loaves"},   {"shelf", "shelves"},
  };
  return table;
}

// Same in both numbers, or ends in 's' while singular.
const std::set<std::string, std::less<>>& invariant_nouns() {
  static const std::set<std::string, std::less<>> words = {
      "sheep", "fish",  "deer",   "moose",  "species", "series", "news",
      "bus",   "glass", "grass",  "dress",  "class",   "bonus",  "cactus",
      "lens",  "bass",  "chess",  "octopus", "hippopotamus", "scissors",
      "pants", "jeans", "glasses", "skis", "tennis",  "couscous", "asparagus",
      "broccoli"};
  return words;
}

bool is_vowel(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return true;
    default: return false;
  }
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::pair<std::string_view, std::string_view> split_last_word(std::string_view label) {
  auto space = label.rfind(' ');
  if (space == std::string_view::npos) return {{}, label};
  return {label.substr(0, space + 1), label.substr(space + 1)};
}

std::string pluralize_word(std::string_view w) {
  if (w.empty()) return {};
  if (auto it = irregular_plurals().find(w); it != irregular_plurals().end()) {
    return it->second;
  }
  if (invariant_nouns().count(w)) return std::string(w);
  if (w.size() >= 2 && w.back() == 'y' && !is_vowel(w[w.size() - 2])) {
    return std::string(w.substr(0, w.size() - 1)) + "ies";
  }
  if (ends_with(w, "s") || ends_with(w, "x") || ends_with(w, "z") || ends_with(w, "ch") ||
      ends_with(w, "sh")) {
    return std::string(w) + "es";
  }
  if (ends_with(w, "o") && w.size() >= 2 && !is_vowel(w[w.size() - 2])) {
    // potato, tomato, mango
    return std::string(w) + "es";
  }
  return std::string(w) + "s";
}

std::string singularize_word(std::string_view w) {
  for (const auto& [singular, plural] : irregular_plurals()) {
    if (plural == w) return singular;
  }
  if (invariant_nouns().count(w)) return std::string(w);
  if (irregular_plurals().count(w)) return std::string(w);
  if (w.size() > 3 && ends_with(w, "ies")) {
    return std::string(w.substr(0, w.size() - 3)) + "y";
  }
  if (w.size() > 3 && (ends_with(w, "ches") || ends_with(w, "shes") ||
                       ends_with(w, "sses") || ends_with(w, "xes") ||
                       ends_with(w, "zes"))) {
    return std::string(w.substr(0, w.size() - 2));
  }
  if (w.size() > 3 && ends_with(w, "oes")) {
    return std::string(w.substr(0, w.size() - 2));
  }
  if (w.size() > 2 && w.back() == 's' && !ends_with(w, "ss") && !ends_with(w, "us") &&
      !ends_with(w, "is")) {
    return std::string(w.substr(0, w.size() - 1));
  }
  return std::string(w);
}

}  // namespace

std::string_view indefinite_article(std::string_view label) {
  return !label.empty() && is_vowel(label.front()) ? "an" : "a";
}

std::string_view number_word(int n) {
  if (n < 1 || n > 10) {
    throw Error(Errc::count_out_of_range, "no number word for " + std::to_string(n));
  }
  return kNumberWords[static_cast<std::size_t>(n - 1)];
}

std::string pluralize(std::string_view label) {
  auto [head, last] = split_last_word(label);
  return std::string(head) + pluralize_word(last);
}

std::string singularize(std::string_view label) {
  auto [head, last] = split_last_word(label);
  return std::string(head) + singularize_word(last);
}

const std::map<std::string, std::string>& default_synonyms() {
  static const std::map<std::string, std::string> table = {
      {"puppy", "dog"},  {"doggy", "dog"},   {"hound", "dog"},   {"dog breed", "dog"},
      {"kitten", "cat"}, {"kitty", "cat"},   {"tabby", "cat"},   {"tabby cat", "cat"},
      {"calf", "cow"},   {"cattle", "cow"},  {"bull", "cow"},    {"ox", "cow"},
      {"green apple", "apple"}, {"red apple", "apple"}, {"banana bunch", "banana"},
  };
  return table;
}

LabelNormalizer::LabelNormalizer() : synonyms_(default_synonyms()) {}

LabelNormalizer::LabelNormalizer(std::map<std::string, std::string> synonyms)
    : synonyms_(std::move(synonyms)) {}

std::string LabelNormalizer::normalize(std::string_view raw) const {
  std::string s;
  s.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !s.empty();
      continue;
    }
    if (pending_space) s += ' ';
    pending_space = false;
    s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (auto it = synonyms_.find(s); it != synonyms_.end()) return it->second;
  std::string single = singularize(s);
  if (auto it = synonyms_.find(single); it != synonyms_.end()) return it->second;
  return single;
}

}  // namespace metalogic
