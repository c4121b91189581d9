#pragma once

// Combination prompting: templates expanded over an entity vocabulary.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metalogic/templates.hpp"

namespace metalogic {

inline constexpr std::string_view kToolName = "metalogic";
inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kManifestSchemaVersion = 1;

struct SuiteConfig {
  std::vector<std::string> vocabulary = {"cat", "dog", "apple", "banana", "cow"};
  /// Empty means "all". Modifier filter accepts and/or/x/y/n1..n10, plus "n"
  /// for every numbering count.
  std::vector<std::string> laws;
  std::vector<std::string> modifiers;
  std::vector<std::string> numbering_entities = default_numbering_entities();
  int count_min = 1;
  int count_max = 10;
  std::optional<std::size_t> max_cases_per_category;
  std::uint64_t seed = 0;

  /// Every violation, one line each; empty when valid.
  std::vector<std::string> violations() const;

  bool operator==(const SuiteConfig&) const = default;
};

struct TestCase {
  std::string case_id;
  std::string template_id;
  Law law;
  Modifier modifier;
  std::vector<std::string> entities;
  std::optional<int> count;
  std::string prompt_a;
  std::string prompt_b;
  SceneSpec scene;
  /// Counted entity for numbering cases.
  std::optional<std::string> numbered_entity;

  bool operator==(const TestCase&) const = default;
};

/// All ordered k-tuples without repetition, lexicographic in vocabulary index.
std::vector<std::vector<std::string>> entity_combinations(std::span<const std::string> vocab,
                                                          int k);

/// "<template_id>__<e1>-<e2>[-<e3>]" with spaces in labels turned into '_'.
std::string make_case_id(std::string_view template_id, std::span<const std::string> entities);

/// Deterministic for a fixed config. Throws Error(invalid_config) on an
/// invalid config and Error(empty_suite) when the filters leave nothing.
std::vector<TestCase> generate_suite(const SuiteConfig& config);

struct Manifest {
  SuiteConfig config;
  std::vector<TestCase> cases;
  std::map<std::string, std::size_t, std::less<>> index;  // case_id -> position

  void reindex();

  /// Throws Error(unknown_case).
  const TestCase& find(std::string_view case_id) const;
};

/// Line-delimited JSON: one header record, then one record per case.
void write_manifest(std::ostream& out, const SuiteConfig& config,
                    std::span<const TestCase> cases);
Manifest read_manifest(std::istream& in);

}  // namespace metalogic
