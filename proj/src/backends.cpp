#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "metalogic/backends.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "metalogic/errors.hpp"
#include "metalogic/image.hpp"
#include "metalogic/serialization.hpp"

namespace metalogic {

std::string_view to_string(Side s) { return s == Side::a ? "a" : "b"; }

std::string GenerationRequest::transmitted_prompt() const {
  if (!literal_prefix) return prompt;
  return std::string(kLiteralPrefix) + " " + prompt;
}

std::vector<std::string> DetectionResult::violations() const {
  std::vector<std::string> out;
  if (width <= 0 || height <= 0) out.push_back("image size must be positive");
  auto check_box = [&](const BBox& b, const std::string& where) {
    if (!(b.x1 < b.x2) || !(b.y1 < b.y2)) out.push_back(where + ": degenerate bbox");
    if (b.x1 < 0 || b.y1 < 0 || b.x2 > width || b.y2 > height) {
      out.push_back(where + ": bbox outside the image");
    }
  };
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto where = "detections/" + std::to_string(i);
    if (!(detections[i].score >= 0.0 && detections[i].score <= 1.0)) {
      out.push_back(where + ": score outside [0,1]");
    }
    check_box(detections[i].bbox, where);
  }
  for (std::size_t i = 0; i < ocr_regions.size(); ++i) {
    check_box(ocr_regions[i].bbox, "ocr/" + std::to_string(i));
  }
  return out;
}

bool FailureConfig::applies_to(Side s) const noexcept {
  switch (sides) {
    case FailureSides::both: return true;
    case FailureSides::a: return s == Side::a;
    case FailureSides::b: return s == Side::b;
  }
  return true;
}

std::vector<std::string> FailureConfig::violations() const {
  std::vector<std::string> out;
  auto check = [&](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) out.push_back(std::string(name) + ": must lie in [0,1]");
  };
  check(p_omit, "p_omit");
  check(p_duplicate, "p_duplicate");
  check(p_swap_position, "p_swap_position");
  check(p_text_fallback, "p_text_fallback");
  return out;
}

// ---------------------------------------------------------------------------
// Scene synthesis
// ---------------------------------------------------------------------------

namespace {

std::map<std::string, int> axis_ranks(const SceneSpec& scene) {
  std::map<std::string, int> rank;
  for (const auto& [label, count] : scene.expected_entities) rank[label] = 0;
  if (!scene.axis || !scene.expected_relations) return rank;
  for (const auto& r : *scene.expected_relations) {
    switch (r.relation) {
      case Relation::right_of:
      case Relation::below:
        ++rank[r.subject];
        break;
      case Relation::left_of:
      case Relation::above:
        ++rank[r.object];
        break;
    }
  }
  return rank;
}

BBox shifted(const BBox& b, double dx, double dy) {
  return {b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
}

}  // namespace

SyntheticScene synthesize_scene(const SceneSpec& scene, const FailureConfig& failures,
                                Side side, Rng& rng, std::string_view prompt, int width,
                                int height) {
  SyntheticScene out;
  out.width = width;
  out.height = height;

  std::vector<std::string> instances;
  if (scene.axis) {
    const auto rank = axis_ranks(scene);
    std::vector<std::pair<int, std::string>> order;
    for (const auto& [label, r] : rank) order.emplace_back(r, label);
    std::sort(order.begin(), order.end());
    for (const auto& [r, label] : order) {
      for (int k = 0; k < scene.expected_entities.at(label); ++k) instances.push_back(label);
    }
  } else {
    for (const auto& [label, count] : scene.expected_entities) {
      for (int k = 0; k < count; ++k) instances.push_back(label);
    }
    rng.shuffle(instances);
  }

  const int n = static_cast<int>(instances.size());
  const double w = width, h = height;
  for (int i = 0; i < n; ++i) {
    double cx, cy, side_len;
    if (scene.axis) {
      const double slot = (scene.axis == Axis::x ? w : h) / n;
      const double along = (i + 0.5) * slot;
      const double across = (scene.axis == Axis::x ? h : w) / 2.0;
      side_len = std::min(0.6 * slot, 0.4 * (scene.axis == Axis::x ? h : w));
      const double jitter = 0.05 * slot;
      const double ja = (rng.unit() * 2 - 1) * jitter;
      const double jc = (rng.unit() * 2 - 1) * jitter;
      cx = scene.axis == Axis::x ? along + ja : across + jc;
      cy = scene.axis == Axis::x ? across + jc : along + ja;
    } else {
      const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
      const int rows = (n + cols - 1) / cols;
      const double cw = w / cols, ch = h / rows;
      side_len = 0.6 * std::min(cw, ch);
      cx = (i % cols + 0.5) * cw + (rng.unit() * 2 - 1) * 0.05 * cw;
      cy = (i / cols + 0.5) * ch + (rng.unit() * 2 - 1) * 0.05 * ch;
    }
    const double score = 0.6 + 0.4 * rng.unit();
    out.detections.push_back({instances[static_cast<std::size_t>(i)], score,
                              {cx - side_len / 2, cy - side_len / 2, cx + side_len / 2,
                               cy + side_len / 2}});
  }

  if (!failures.applies_to(side)) return out;
  auto& dets = out.detections;

  if (rng.bernoulli(failures.p_omit) && !dets.empty()) {
    dets.erase(dets.begin() + static_cast<std::ptrdiff_t>(rng.below(dets.size())));
    out.injected.omitted = true;
  }

  if (rng.bernoulli(failures.p_duplicate) && !dets.empty()) {
    Detection copy = dets[rng.below(dets.size())];
    const double bw = copy.bbox.x2 - copy.bbox.x1;
    const double bh = copy.bbox.y2 - copy.bbox.y1;
    // Offset across the scene axis so positional order is untouched.
    if (scene.axis == Axis::y) {
      const double dx = copy.bbox.x2 + 1.1 * bw <= w ? 1.1 * bw : -std::min(1.1 * bw, copy.bbox.x1);
      copy.bbox = shifted(copy.bbox, dx, 0);
    } else {
      const double dy = copy.bbox.y2 + 1.1 * bh <= h ? 1.1 * bh : -std::min(1.1 * bh, copy.bbox.y1);
      copy.bbox = shifted(copy.bbox, 0, dy);
    }
    dets.push_back(copy);
    out.injected.duplicated = true;
  }

  if (rng.bernoulli(failures.p_swap_position) && scene.axis && dets.size() >= 2) {
    const auto i = static_cast<std::size_t>(rng.below(dets.size()));
    auto coord = [&](const Detection& d) {
      return scene.axis == Axis::x ? d.bbox.cx() : d.bbox.cy();
    };
    std::vector<std::size_t> partners;
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (dets[j].label != dets[i].label && coord(dets[j]) != coord(dets[i])) {
        partners.push_back(j);
      }
    }
    if (!partners.empty()) {
      const auto j = partners[rng.below(partners.size())];
      const double d = coord(dets[j]) - coord(dets[i]);
      if (scene.axis == Axis::x) {
        dets[i].bbox = shifted(dets[i].bbox, d, 0);
        dets[j].bbox = shifted(dets[j].bbox, -d, 0);
      } else {
        dets[i].bbox = shifted(dets[i].bbox, 0, d);
        dets[j].bbox = shifted(dets[j].bbox, 0, -d);
      }
      out.injected.swapped = true;
    }
  }

  if (rng.bernoulli(failures.p_text_fallback)) {
    dets.clear();
    out.ocr_regions.push_back({std::string(prompt), {0.1 * w, 0.35 * h, 0.9 * w, 0.65 * h}});
    out.injected.text_fallback = true;
  }
  return out;
}

std::string render_mock_png(const SyntheticScene& s) {
  RgbImage img(s.width, s.height, {245, 245, 240});
  for (const auto& d : s.detections) {
    img.fill_rect(d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2, label_color(d.label));
  }
  for (const auto& o : s.ocr_regions) {
    img.fill_rect(o.bbox.x1, o.bbox.y1, o.bbox.x2, o.bbox.y2, {230, 230, 230});
    // Text-like stripes.
    const double line = (o.bbox.y2 - o.bbox.y1) / 7.0;
    for (int k = 1; k < 7; k += 2) {
      img.fill_rect(o.bbox.x1 + 8, o.bbox.y1 + k * line, o.bbox.x2 - 8,
                    o.bbox.y1 + (k + 1) * line - 2, {40, 40, 40});
    }
  }
  const json wire = detections_to_wire(s.detections, s.ocr_regions, s.width, s.height);
  return encode_png(img, {{std::string(kMockSceneKey), dump_line(wire)}});
}

Rng mock_rng(const FailureConfig& failures, std::string_view model, std::string_view case_id,
             Side side) {
  std::string tag(model);
  tag += '/';
  tag += case_id;
  tag += '/';
  tag += to_string(side);
  return Rng(derive_seed(failures.seed, tag));
}

std::pair<ImageRef, DetectionResult> mock_scene(const SceneSpec& scene,
                                                const FailureConfig& failures, Rng& rng,
                                                const std::filesystem::path& path,
                                                std::string_view case_id, Side side,
                                                std::string_view prompt) {
  const auto start = std::chrono::steady_clock::now();
  SyntheticScene s = synthesize_scene(scene, failures, side, rng, prompt);
  const std::string bytes = render_mock_png(s);
  write_file(path, bytes);
  ImageRef ref{std::string(case_id), side, path, sha256_hex(bytes), "mock",
               std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                   .count(),
               std::nullopt};
  DetectionResult det{ref, std::move(s.detections), std::move(s.ocr_regions), s.width,
                      s.height};
  return {std::move(ref), std::move(det)};
}

// ---------------------------------------------------------------------------
// Retry and rate limiting
// ---------------------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  double ms = static_cast<double>(initial_backoff.count()) *
              std::pow(multiplier, std::max(0, attempt - 1));
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

RateLimiter::RateLimiter(double requests_per_minute) {
  if (requests_per_minute > 0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / requests_per_minute));
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    if (next_ < now) next_ = now;
    slot = next_;
    next_ += interval_;
  }
  std::this_thread::sleep_until(slot);
}

namespace {

bool transient(Errc c) {
  return c == Errc::transport || c == Errc::rate_limited || c == Errc::backend_unavailable;
}

}  // namespace

std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt,
                         const std::function<void(std::chrono::milliseconds)>& sleep) {
  const int attempts = std::max(1, policy.max_attempts);
  for (int i = 1;; ++i) {
    try {
      return attempt();
    } catch (const Error& e) {
      if (!transient(e.code()) || i >= attempts) {
        if (transient(e.code())) {
          throw Error(e.code(), std::string(e.what()) + " (after " + std::to_string(i) +
                                    " attempts)");
        }
        throw;
      }
      const auto wait = policy.backoff(i);
      spdlog::debug("attempt {} failed ({}); retrying in {} ms", i, e.what(), wait.count());
      if (sleep) {
        sleep(wait);
      } else {
        std::this_thread::sleep_for(wait);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Mock backends
// ---------------------------------------------------------------------------

MockGenerator::MockGenerator(FailureConfig failures, std::string model, int width, int height)
    : failures_(failures), model_(std::move(model)), width_(width), height_(height) {}

std::string MockGenerator::generate(const GenerationRequest& req, const GenerationContext& ctx) {
  if (!ctx.scene) {
    throw Error(Errc::backend_unavailable, "mock generator needs the case scene");
  }
  Rng rng = mock_rng(failures_, model_, ctx.case_id, ctx.side);
  const SyntheticScene s =
      synthesize_scene(*ctx.scene, failures_, ctx.side, rng, req.prompt, width_, height_);
  return render_mock_png(s);
}

RawDetections MockDetector::detect(std::string_view image_bytes) {
  auto text = png_text(image_bytes, kMockSceneKey);
  if (!text) {
    throw Error(Errc::undecodable_image, "image carries no embedded mock scene");
  }
  return parse_detection_wire(*text);
}

// ---------------------------------------------------------------------------
// HTTP backends
// ---------------------------------------------------------------------------

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::invalid_config, "endpoint '" + url + "' lacks a scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

httplib::Headers auth_headers(const std::string& credential_env) {
  httplib::Headers h;
  if (credential_env.empty()) return h;
  const char* key = std::getenv(credential_env.c_str());
  if (!key || !*key) {
    throw Error(Errc::auth, "environment variable " + credential_env + " is not set");
  }
  h.emplace("Authorization", std::string("Bearer ") + key);
  return h;
}

[[noreturn]] void raise_for_status(int status, const std::string& body,
                                   const std::string& what) {
  const std::string msg = what + ": HTTP " + std::to_string(status);
  if (status == 401 || status == 403) throw Error(Errc::auth, msg);
  if (status == 429) throw Error(Errc::rate_limited, msg);
  if (status == 451 || (status >= 400 && status < 500 &&
                        (body.find("content_policy") != std::string::npos ||
                         body.find("safety") != std::string::npos))) {
    throw Error(Errc::content_policy, msg + " (content policy)");
  }
  if (status >= 500) throw Error(Errc::backend_unavailable, msg);
  throw Error(Errc::schema, msg + ": " + body.substr(0, 200));
}

httplib::Client make_client(const std::string& origin, std::chrono::seconds timeout) {
  httplib::Client cli(origin);
  cli.set_connection_timeout(std::chrono::seconds(10));
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  cli.set_follow_location(true);
  return cli;
}

std::string fetch_url(const std::string& url, std::chrono::seconds timeout) {
  const Url u = split_url(url);
  auto cli = make_client(u.origin, timeout);
  auto res = cli.Get(u.path);
  if (!res) {
    throw Error(Errc::transport, "GET " + url + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) raise_for_status(res->status, res->body, "GET " + url);
  return res->body;
}

}  // namespace

HttpGenerator::HttpGenerator(HttpGenerationOptions options)
    : options_(std::move(options)), limiter_(options_.requests_per_minute) {
  split_url(options_.endpoint);
}

std::string HttpGenerator::request_body(const GenerationRequest& req) const {
  json body;
  body["prompt"] = req.transmitted_prompt();
  if (options_.kind == HttpGenerationKind::openai) {
    if (!options_.model.empty()) body["model"] = options_.model;
    body["n"] = 1;
    body["size"] = options_.size;
    body["response_format"] = "b64_json";
  } else {
    if (req.seed) body["seed"] = *req.seed;
    if (!options_.size.empty()) body["size"] = options_.size;
  }
  return body.dump();
}

std::string HttpGenerator::generate(const GenerationRequest& req, const GenerationContext& ctx) {
  const Url u = split_url(options_.endpoint);
  const std::string body = request_body(req);
  const auto headers = auth_headers(options_.credential_env);
  return with_retries(options_.retry, [&]() -> std::string {
    limiter_.acquire();
    auto cli = make_client(u.origin, options_.timeout);
    spdlog::debug("[{}] POST {} case={} side={}", options_.name, options_.endpoint, ctx.case_id,
                  to_string(ctx.side));
    auto res = cli.Post(u.path, headers, body, "application/json");
    if (!res) {
      throw Error(Errc::transport,
                  "POST " + options_.endpoint + ": " + httplib::to_string(res.error()));
    }
    spdlog::debug("[{}] HTTP {} ({} bytes)", options_.name, res->status, res->body.size());
    if (res->status != 200) raise_for_status(res->status, res->body, "POST " + options_.endpoint);
    json j;
    try {
      j = json::parse(res->body);
    } catch (const json::exception& e) {
      throw Error(Errc::schema, std::string("generation response is not JSON: ") + e.what());
    }
    const json* item = &j;
    if (j.contains("data") && j["data"].is_array() && !j["data"].empty()) item = &j["data"][0];
    for (const char* key : {"b64_json", "image_b64"}) {
      if (item->contains(key)) return base64_decode(item->at(key).get<std::string>());
    }
    if (item->contains("url")) return fetch_url(item->at("url").get<std::string>(), options_.timeout);
    throw Error(Errc::schema, "generation response has neither image_b64 nor url");
  });
}

HttpDetector::HttpDetector(HttpDetectionOptions options)
    : options_(std::move(options)), limiter_(options_.requests_per_minute) {
  split_url(options_.endpoint);
}

RawDetections HttpDetector::detect(std::string_view image_bytes) {
  const Url u = split_url(options_.endpoint);
  const auto headers = auth_headers(options_.credential_env);
  const std::string content_type = looks_like_png(image_bytes) ? "image/png" : "image/jpeg";
  const std::string body = with_retries(options_.retry, [&]() -> std::string {
    limiter_.acquire();
    auto cli = make_client(u.origin, options_.timeout);
    auto res = cli.Post(u.path, headers, std::string(image_bytes), content_type);
    if (!res) {
      throw Error(Errc::backend_unavailable,
                  "POST " + options_.endpoint + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 400) throw Error(Errc::undecodable_image, "detector rejected the image");
    if (res->status == 503) throw Error(Errc::backend_unavailable, "detector model not loaded");
    if (res->status != 200) raise_for_status(res->status, res->body, "POST " + options_.endpoint);
    return res->body;
  });
  return parse_detection_wire(body);
}

RawDetections parse_detection_wire(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::schema, std::string("detection payload is not JSON: ") + e.what());
  }
  auto fail = [](const std::string& m) { throw Error(Errc::schema, "detection payload: " + m); };
  if (!j.is_object()) fail("not an object");
  for (const char* key : {"detections", "width", "height"}) {
    if (!j.contains(key)) fail(std::string("missing '") + key + "'");
  }
  if (!j["width"].is_number_integer() || !j["height"].is_number_integer()) {
    fail("width/height must be integers");
  }
  RawDetections out;
  out.width = j["width"].get<int>();
  out.height = j["height"].get<int>();
  if (out.width <= 0 || out.height <= 0) fail("width/height must be positive");
  auto read_box = [&](const json& b, const std::string& where) {
    if (!b.is_array() || b.size() != 4) fail(where + ".bbox must have 4 numbers");
    for (const auto& v : b) {
      if (!v.is_number()) fail(where + ".bbox must have 4 numbers");
    }
    BBox box = b.get<BBox>();
    if (!(box.x1 < box.x2) || !(box.y1 < box.y2)) fail(where + ".bbox must satisfy x1<x2, y1<y2");
    return box;
  };
  if (!j["detections"].is_array()) fail("'detections' must be an array");
  for (std::size_t i = 0; i < j["detections"].size(); ++i) {
    const auto& d = j["detections"][i];
    const std::string where = "detections[" + std::to_string(i) + "]";
    if (!d.is_object() || !d.contains("label") || !d["label"].is_string()) {
      fail(where + ".label must be a string");
    }
    if (!d.contains("score") || !d["score"].is_number()) fail(where + ".score must be a number");
    const double score = d["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0)) fail(where + ".score outside [0,1]");
    if (!d.contains("bbox")) fail(where + ".bbox missing");
    out.detections.push_back({d["label"].get<std::string>(), score, read_box(d["bbox"], where)});
  }
  if (j.contains("ocr")) {
    if (!j["ocr"].is_array()) fail("'ocr' must be an array");
    for (std::size_t i = 0; i < j["ocr"].size(); ++i) {
      const auto& o = j["ocr"][i];
      const std::string where = "ocr[" + std::to_string(i) + "]";
      if (!o.is_object() || !o.contains("text") || !o["text"].is_string()) {
        fail(where + ".text must be a string");
      }
      if (!o.contains("bbox")) fail(where + ".bbox missing");
      out.ocr_regions.push_back({o["text"].get<std::string>(), read_box(o["bbox"], where)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline-facing operations
// ---------------------------------------------------------------------------

ImageRef generate_image(GenerationBackend& backend, const GenerationRequest& req,
                        const GenerationContext& ctx, const std::filesystem::path& path) {
  if (req.prompt.empty()) throw Error(Errc::invalid_config, "empty prompt");
  const auto start = std::chrono::steady_clock::now();
  const std::string bytes = backend.generate(req, ctx);
  const double latency =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  write_file(path, bytes);
  spdlog::debug("[{}] {} side {} -> {} ({} bytes, {:.1f} ms)", backend.name(), ctx.case_id,
                to_string(ctx.side), path.string(), bytes.size(), latency);
  return ImageRef{ctx.case_id, ctx.side,  path,   sha256_hex(bytes), backend.name(),
                  latency,     req.seed};
}

namespace {

BBox clip(const BBox& b, int w, int h) {
  return {std::clamp(b.x1, 0.0, static_cast<double>(w)), std::clamp(b.y1, 0.0, static_cast<double>(h)),
          std::clamp(b.x2, 0.0, static_cast<double>(w)), std::clamp(b.y2, 0.0, static_cast<double>(h))};
}

bool degenerate(const BBox& b) { return !(b.x1 < b.x2) || !(b.y1 < b.y2); }

}  // namespace

DetectionResult detect_objects(DetectionBackend& backend, const ImageRef& image,
                               double score_threshold, const std::filesystem::path& root) {
  const auto full = image.path.is_absolute() || root.empty() ? image.path : root / image.path;
  std::string bytes;
  try {
    bytes = read_file(full);
  } catch (const Error&) {
    throw Error(Errc::undecodable_image, "cannot read image " + full.string());
  }
  if (!image.sha256.empty() && sha256_hex(bytes) != image.sha256) {
    throw Error(Errc::digest_mismatch, "digest of " + full.string() + " changed since generation");
  }
  RawDetections raw = backend.detect(bytes);
  DetectionResult out;
  out.image = image;
  out.width = raw.width;
  out.height = raw.height;
  for (auto& d : raw.detections) {
    if (d.score < score_threshold) continue;
    d.bbox = clip(d.bbox, raw.width, raw.height);
    if (degenerate(d.bbox)) continue;
    out.detections.push_back(std::move(d));
  }
  for (auto& o : raw.ocr_regions) {
    o.bbox = clip(o.bbox, raw.width, raw.height);
    if (!degenerate(o.bbox)) out.ocr_regions.push_back(std::move(o));
  }
  return out;
}

}  // namespace metalogic
