#pragma once

// Run configuration: one JSON file, validated with JSON-pointer paths.
// Secrets are never read from the file, only the names of environment
// variables holding them.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metalogic/backends.hpp"
#include "metalogic/classifier.hpp"
#include "metalogic/comparator.hpp"
#include "metalogic/report.hpp"
#include "metalogic/serialization.hpp"
#include "metalogic/suite.hpp"

namespace metalogic {

enum class GeneratorKind { mock, openai, sd };

struct GeneratorProfile {
  std::string name;
  GeneratorKind kind = GeneratorKind::mock;
  bool literal_prefix = false;
  std::optional<std::uint32_t> seed;
  // mock
  FailureConfig failures;
  int width = 512;
  int height = 512;
  // http
  HttpGenerationOptions http;
};

enum class DetectorKind { mock, http };

struct DetectorProfile {
  DetectorKind kind = DetectorKind::mock;
  double score_threshold = kDefaultScoreThreshold;
  HttpDetectionOptions http;
};

struct RunConfig {
  std::string run_id = "default";
  std::filesystem::path output_dir = "runs";
  SuiteConfig suite;
  std::vector<GeneratorProfile> generators;
  DetectorProfile detector;
  ComparatorConfig comparator;
  ClassifierConfig classifier;
  std::vector<ReportFormat> formats = {ReportFormat::json, ReportFormat::csv,
                                       ReportFormat::html};
  /// Maximum in-flight backend requests.
  int concurrency = 1;
  std::string log_level = "info";

  std::filesystem::path run_dir() const { return output_dir / run_id; }
};

/// Throws ConfigError listing every violation as "<json-pointer>: <problem>".
RunConfig parse_config(const json& j);
RunConfig load_config(const std::filesystem::path& path);

std::unique_ptr<GenerationBackend> make_generator(const GeneratorProfile& p);
std::unique_ptr<DetectionBackend> make_detector(const DetectorProfile& p);

std::string_view to_string(ReportFormat f);

}  // namespace metalogic
