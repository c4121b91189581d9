#pragma once

// JSON mappings for every persisted record. nlohmann::json keeps object keys
// sorted, which is what makes emitted files byte-stable.

#include <json.hpp>

#include "metalogic/backends.hpp"
#include "metalogic/comparator.hpp"
#include "metalogic/report.hpp"
#include "metalogic/suite.hpp"

namespace metalogic {

using json = nlohmann::json;

void to_json(json& j, const SceneSpec& s);
void from_json(const json& j, SceneSpec& s);

void to_json(json& j, const SuiteConfig& c);
void from_json(const json& j, SuiteConfig& c);

void to_json(json& j, const TestCase& t);
void from_json(const json& j, TestCase& t);

void to_json(json& j, const BBox& b);
void from_json(const json& j, BBox& b);

void to_json(json& j, const ImageRef& r);
void from_json(const json& j, ImageRef& r);

void to_json(json& j, const DetectionResult& d);
void from_json(const json& j, DetectionResult& d);

void to_json(json& j, const FailureConfig& f);
void from_json(const json& j, FailureConfig& f);

void to_json(json& j, const Verdict& v);
void from_json(const json& j, Verdict& v);

void to_json(json& j, const VerdictRecord& r);
void from_json(const json& j, VerdictRecord& r);

/// Wire-format body for detections (no ImageRef).
json detections_to_wire(const std::vector<Detection>& dets, const std::vector<OcrRegion>& ocr,
                        int width, int height);

/// Compact single-line dump used for every .json/.jsonl artifact.
std::string dump_line(const json& j);

}  // namespace metalogic
