#pragma once

// Image-generation and object-detection adapters. HTTP adapters talk to
// remote services; mock adapters synthesize scenes (with injectable failure
// modes) so the whole harness runs offline.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metalogic/rng.hpp"
#include "metalogic/templates.hpp"

namespace metalogic {

inline constexpr std::string_view kLiteralPrefix =
    "I NEED to test how the tool works with extremely simple prompts. DO NOT add any "
    "detail, just use it AS-IS:";

/// tEXt key under which mock images carry their synthesized detections.
inline constexpr std::string_view kMockSceneKey = "metalogic-scene";

enum class Side { a, b };
std::string_view to_string(Side s);

struct GenerationRequest {
  std::string prompt;
  std::optional<std::uint32_t> seed;
  std::string model_profile;
  bool literal_prefix = false;

  /// The prompt as sent over the wire.
  std::string transmitted_prompt() const;
};

struct ImageRef {
  std::string case_id;
  Side side = Side::a;
  std::filesystem::path path;
  std::string sha256;
  std::string backend_name;
  double latency_ms = 0.0;
  std::optional<std::uint32_t> seed;

  bool operator==(const ImageRef&) const = default;
};

struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double cx() const noexcept { return (x1 + x2) / 2.0; }
  double cy() const noexcept { return (y1 + y2) / 2.0; }
  double area() const noexcept { return (x2 - x1) * (y2 - y1); }

  bool operator==(const BBox&) const = default;
};

struct Detection {
  std::string label;
  double score = 1.0;
  BBox bbox;

  bool operator==(const Detection&) const = default;
};

struct OcrRegion {
  std::string text;
  BBox bbox;

  bool operator==(const OcrRegion&) const = default;
};

struct DetectionResult {
  ImageRef image;
  std::vector<Detection> detections;
  std::vector<OcrRegion> ocr_regions;
  int width = 0;
  int height = 0;

  /// Violations of the bbox/score invariants; empty when valid.
  std::vector<std::string> violations() const;

  bool operator==(const DetectionResult&) const = default;
};

/// Which images of a pair receive injected failures.
enum class FailureSides { both, a, b };

struct FailureConfig {
  double p_omit = 0.0;
  double p_duplicate = 0.0;
  double p_swap_position = 0.0;
  double p_text_fallback = 0.0;
  std::uint64_t seed = 0;
  FailureSides sides = FailureSides::both;

  bool applies_to(Side s) const noexcept;
  std::vector<std::string> violations() const;

  bool operator==(const FailureConfig&) const = default;
};

/// Per-image record of which failure modes fired.
struct InjectedFailures {
  bool omitted = false;
  bool duplicated = false;
  bool swapped = false;
  bool text_fallback = false;
};

/// A synthesized image's content before rasterization.
struct SyntheticScene {
  std::vector<Detection> detections;
  std::vector<OcrRegion> ocr_regions;
  int width = 0;
  int height = 0;
  InjectedFailures injected;
};

/// Lays the scene out (axis scenes ordered by the expected relations) and
/// applies each failure mode as an independent Bernoulli draw, in the order
/// omit, duplicate, swap, text fallback.
SyntheticScene synthesize_scene(const SceneSpec& scene, const FailureConfig& failures,
                                Side side, Rng& rng, std::string_view prompt,
                                int width = 512, int height = 512);

/// Placeholder raster for a synthetic scene, with the detections embedded
/// as a tEXt chunk so the mock detector can read them back.
std::string render_mock_png(const SyntheticScene& s);

/// The RNG stream for one image of one case; independent of run order.
Rng mock_rng(const FailureConfig& failures, std::string_view model, std::string_view case_id,
             Side side);

/// Synthesizes, rasterizes and persists a scene at `path`.
std::pair<ImageRef, DetectionResult> mock_scene(const SceneSpec& scene,
                                                const FailureConfig& failures, Rng& rng,
                                                const std::filesystem::path& path,
                                                std::string_view case_id, Side side,
                                                std::string_view prompt = {});

// ---------------------------------------------------------------------------
// Backend interfaces
// ---------------------------------------------------------------------------

struct GenerationContext {
  std::string case_id;
  Side side = Side::a;
  const SceneSpec* scene = nullptr;  // used by the mock backend only
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string name() const = 0;
  /// Encoded image bytes.
  virtual std::string generate(const GenerationRequest& req, const GenerationContext& ctx) = 0;
};

struct RawDetections {
  std::vector<Detection> detections;
  std::vector<OcrRegion> ocr_regions;
  int width = 0;
  int height = 0;
};

class DetectionBackend {
 public:
  virtual ~DetectionBackend() = default;
  virtual std::string name() const = 0;
  virtual RawDetections detect(std::string_view image_bytes) = 0;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds backoff(int attempt) const;
};

/// Spaces request starts so that at most `requests_per_minute` begin in any
/// minute. Zero disables limiting. Thread-safe.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_{};
};

/// Runs `attempt` under the retry policy. Transient errors (transport,
/// rate_limited, backend_unavailable) are retried; others propagate at once.
/// `sleep` is injectable for tests.
std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt,
                         const std::function<void(std::chrono::milliseconds)>& sleep = {});

class MockGenerator final : public GenerationBackend {
 public:
  explicit MockGenerator(FailureConfig failures, std::string model = "mock", int width = 512,
                         int height = 512);
  std::string name() const override { return model_; }
  std::string generate(const GenerationRequest& req, const GenerationContext& ctx) override;

 private:
  FailureConfig failures_;
  std::string model_;
  int width_;
  int height_;
};

/// Reads back the detections embedded by MockGenerator.
class MockDetector final : public DetectionBackend {
 public:
  std::string name() const override { return "mock"; }
  RawDetections detect(std::string_view image_bytes) override;
};

enum class HttpGenerationKind { openai, sd };

struct HttpGenerationOptions {
  std::string name;
  HttpGenerationKind kind = HttpGenerationKind::sd;
  std::string endpoint;        // full URL including path
  std::string credential_env;  // variable holding the API key; may be empty
  std::string model;           // sent as "model" for the openai profile
  std::string size = "1024x1024";
  RetryPolicy retry;
  double requests_per_minute = 0;
  std::chrono::seconds timeout{120};
};

class HttpGenerator final : public GenerationBackend {
 public:
  explicit HttpGenerator(HttpGenerationOptions options);
  std::string name() const override { return options_.name; }
  std::string generate(const GenerationRequest& req, const GenerationContext& ctx) override;

  /// Request body for the profile (exposed for tests).
  std::string request_body(const GenerationRequest& req) const;

 private:
  HttpGenerationOptions options_;
  RateLimiter limiter_;
};

struct HttpDetectionOptions {
  std::string endpoint;
  std::string credential_env;
  RetryPolicy retry;
  double requests_per_minute = 0;
  std::chrono::seconds timeout{120};
};

class HttpDetector final : public DetectionBackend {
 public:
  explicit HttpDetector(HttpDetectionOptions options);
  std::string name() const override { return "http"; }
  RawDetections detect(std::string_view image_bytes) override;

 private:
  HttpDetectionOptions options_;
  RateLimiter limiter_;
};

/// Parses and validates the detection wire format
/// {"detections":[{"label","score","bbox"}],"ocr":[{"text","bbox"}],"width","height"}.
/// Throws Error(schema).
RawDetections parse_detection_wire(std::string_view json_text);

/// Calls the backend, persists the image at `path` and returns its reference.
ImageRef generate_image(GenerationBackend& backend, const GenerationRequest& req,
                        const GenerationContext& ctx, const std::filesystem::path& path);

inline constexpr double kDefaultScoreThreshold = 0.30;

/// Reads the image, checks its digest, runs the detector and keeps
/// detections with score >= threshold. Labels pass through unchanged.
/// Relative image paths are resolved against `root`.
DetectionResult detect_objects(DetectionBackend& backend, const ImageRef& image,
                               double score_threshold = kDefaultScoreThreshold,
                               const std::filesystem::path& root = {});

}  // namespace metalogic
