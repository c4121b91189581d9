#pragma once

// Misalignment-rate tables, numbering-count curves, report emitters and the
// counterexample archive.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "metalogic/classifier.hpp"
#include "metalogic/suite.hpp"

namespace metalogic {

inline constexpr int kVerdictSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

enum class CaseStatus { aligned, misaligned, errored };
std::string_view to_string(CaseStatus s);

/// One line of verdicts.jsonl.
struct VerdictRecord {
  std::string model;
  CaseStatus status = CaseStatus::aligned;
  Verdict verdict;
  /// Reason for errored cases.
  std::string error;

  bool operator==(const VerdictRecord&) const = default;
};

VerdictRecord make_record(std::string model, Verdict verdict);
VerdictRecord make_errored(std::string model, std::string case_id, std::string reason);

struct RateCell {
  int total = 0;
  int errored = 0;
  int misaligned = 0;

  int aligned() const noexcept { return total - errored - misaligned; }
  /// misaligned / (total - errored); nullopt when every case errored.
  std::optional<double> rate() const noexcept;

  RateCell& operator+=(const RateCell& o) noexcept;
  bool operator==(const RateCell&) const = default;
};

/// "45.8" style percentage at one decimal, or "n/a".
std::string format_rate(std::optional<double> rate);

struct RateKey {
  std::string model;
  Law law;
  Modifier modifier;

  auto operator<=>(const RateKey&) const = default;
};

struct RateTable {
  std::map<RateKey, RateCell> rows;
  std::map<Law, RateCell> by_law;
  std::map<Modifier, RateCell> by_modifier;
  std::map<std::string, RateCell> by_model;
  RateCell overall;
};

/// (model, counted entity) -> count -> cell.
using NumberingCurves = std::map<std::pair<std::string, std::string>, std::map<int, RateCell>>;

struct Aggregate {
  RateTable table;
  NumberingCurves curves;
  std::map<ErrorCategory, int> category_counts;
  int uncategorized = 0;
};

/// Exact integer counting. Throws Error(unknown_case) or
/// Error(duplicate_verdict) (same model and case twice).
Aggregate aggregate(std::span<const VerdictRecord> verdicts, const Manifest& manifest);

enum class ReportFormat { json, csv, html };

std::string render_json(const Aggregate& agg);
std::string render_csv(const Aggregate& agg);
std::string render_html(const Aggregate& agg);

/// Writes report.<ext> into `dir`; returns the path. Throws Error(io).
std::filesystem::path emit_report(const Aggregate& agg, ReportFormat format,
                                  const std::filesystem::path& dir);

/// One parsed CSV row (header: scope,model,law,modifier,total,errored,
/// misaligned,aligned,rate_percent).
struct CsvRow {
  std::string scope, model, law, modifier;
  int total = 0, errored = 0, misaligned = 0, aligned = 0;
  std::string rate_percent;
};
std::vector<CsvRow> parse_report_csv(std::string_view csv);

/// "<case_id>__<cat1>_<cat2>..." or "<case_id>__uncategorized".
std::string counterexample_dirname(const Verdict& verdict);

struct CounterexampleInputs {
  const TestCase* tc = nullptr;
  const VerdictRecord* record = nullptr;
  const DetectionResult* det_a = nullptr;
  const DetectionResult* det_b = nullptr;
  /// Image files; non-PNG or missing images get a blank overlay canvas.
  std::filesystem::path image_a;
  std::filesystem::path image_b;
};

/// Writes prompts, images, detections, verdict and annotated overlays
/// (boxes and centroid markers) under `root`. Aligned verdicts produce no
/// entry and return nullopt.
std::optional<std::filesystem::path> log_counterexample(const std::filesystem::path& root,
                                                        const CounterexampleInputs& in);

}  // namespace metalogic
