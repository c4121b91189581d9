#pragma once

// Resumable stage orchestration over a run directory:
//   suite.jsonl
//   images/<model>/<case_id>/<side>.png (+ .ref.json, or .error.json)
//   detections/<model>/<case_id>/<side>.json (or .error.json)
//   verdicts.jsonl, report.{json,csv,html}, counterexamples/, run.log

#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include "metalogic/config.hpp"

namespace metalogic {

enum class Stage { gen_suite, generate, detect, compare, report };

std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);
/// Comma-separated stage names; "all" selects every stage.
std::set<Stage> parse_stages(std::string_view list);
std::set<Stage> all_stages();

struct PipelineOptions {
  std::set<Stage> stages = all_stages();
  bool force = false;
  /// Overrides config.run_dir().
  std::optional<std::filesystem::path> run_dir;
  /// Skip installing the run.log sink (tests that run many pipelines).
  bool file_log = true;
};

struct PipelineSummary {
  int cases = 0;
  int images_generated = 0;
  int images_skipped = 0;
  int detections_run = 0;
  int detections_skipped = 0;
  bool compare_ran = false;
  bool report_ran = false;
  int judged = 0;
  int misaligned = 0;
  int errored = 0;
  /// 0 success, 2 when any case errored.
  int exit_code = 0;
};

struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path suite() const { return root / "suite.jsonl"; }
  std::filesystem::path verdicts() const { return root / "verdicts.jsonl"; }
  std::filesystem::path counterexamples() const { return root / "counterexamples"; }
  std::filesystem::path log() const { return root / "run.log"; }
  std::filesystem::path image(std::string_view model, std::string_view case_id, Side s) const;
  std::filesystem::path image_ref(std::string_view model, std::string_view case_id, Side s) const;
  std::filesystem::path image_error(std::string_view model, std::string_view case_id,
                                    Side s) const;
  std::filesystem::path detection(std::string_view model, std::string_view case_id,
                                  Side s) const;
  std::filesystem::path detection_error(std::string_view model, std::string_view case_id,
                                        Side s) const;
};

/// Runs the requested stages in order. Throws Error(missing_stage_input) when
/// a requested stage lacks its inputs.
PipelineSummary run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

std::vector<VerdictRecord> read_verdicts(const std::filesystem::path& path);

}  // namespace metalogic
