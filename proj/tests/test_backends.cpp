#include <gtest/gtest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "metalogic/backends.hpp"
#include "metalogic/errors.hpp"
#include "metalogic/image.hpp"
#include "metalogic/serialization.hpp"
#include "metalogic/templates.hpp"
#include "support.hpp"

using namespace metalogic;

namespace {

SceneSpec scene_x() {
  return expected_semantics(find_template("associative-x"),
                            std::vector<std::string>{"cat", "dog", "cow"});
}

std::map<std::string, int> counts(const std::vector<Detection>& d) {
  std::map<std::string, int> m;
  for (const auto& x : d) ++m[x.label];
  return m;
}

// Minimal JSON-schema check covering the keywords used by the detection schema.
void validate(const json& v, const json& schema, const json& root, const std::string& at,
              std::vector<std::string>& errors) {
  if (schema.contains("$ref")) {
    const std::string ref = schema["$ref"];
    validate(v, root.at(json::json_pointer(ref.substr(1))), root, at, errors);
    return;
  }
  if (schema.contains("type")) {
    const std::string t = schema["type"];
    const bool ok = (t == "object" && v.is_object()) || (t == "array" && v.is_array()) ||
                    (t == "string" && v.is_string()) || (t == "number" && v.is_number()) ||
                    (t == "integer" && v.is_number_integer());
    if (!ok) {
      errors.push_back(at + ": expected " + t);
      return;
    }
  }
  if (schema.contains("minimum") && v.is_number() && v.get<double>() < schema["minimum"].get<double>()) {
    errors.push_back(at + ": below minimum");
  }
  if (schema.contains("maximum") && v.is_number() && v.get<double>() > schema["maximum"].get<double>()) {
    errors.push_back(at + ": above maximum");
  }
  if (schema.contains("minLength") && v.is_string() && v.get<std::string>().size() < schema["minLength"].get<std::size_t>()) {
    errors.push_back(at + ": too short");
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) errors.push_back(at + ": too few items");
    if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>()) errors.push_back(at + ": too many items");
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) validate(v[i], schema["items"], root, at + "/" + std::to_string(i), errors);
    }
  }
  if (v.is_object()) {
    for (const auto& r : schema.value("required", json::array())) {
      if (!v.contains(r.get<std::string>())) errors.push_back(at + ": missing " + r.get<std::string>());
    }
    if (schema.contains("properties")) {
      for (const auto& [k, sub] : schema["properties"].items()) {
        if (v.contains(k)) validate(v[k], sub, root, at + "/" + k, errors);
      }
    }
  }
}

std::vector<std::string> schema_errors(const json& v) {
  static const json schema =
      json::parse(read_file(std::filesystem::path(METALOGIC_SOURCE_DIR) / "schemas/detection.schema.json"));
  std::vector<std::string> errors;
  validate(v, schema, schema, "", errors);
  return errors;
}

class LocalServer {
 public:
  LocalServer() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  httplib::Server server;

 private:
  int port_ = 0;
  std::thread thread_;
};

RetryPolicy fast_retry(int attempts = 3) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.initial_backoff = std::chrono::milliseconds(1);
  p.max_backoff = std::chrono::milliseconds(2);
  return p;
}

std::string tiny_png() {
  RgbImage img(8, 8, {10, 20, 30});
  return encode_png(img);
}

}  // namespace

TEST(Request, LiteralPrefix) {
  GenerationRequest r{"There is a cat.", std::nullopt, "m", true};
  EXPECT_EQ(r.transmitted_prompt(),
            "I NEED to test how the tool works with extremely simple prompts. DO NOT add any "
            "detail, just use it AS-IS: There is a cat.");
  r.literal_prefix = false;
  EXPECT_EQ(r.transmitted_prompt(), "There is a cat.");
}

TEST(MockScene, NoFailuresReproducesExpectedScene) {
  const SceneSpec s = scene_x();
  Rng rng(3);
  const auto sc = synthesize_scene(s, FailureConfig{}, Side::a, rng, "p");
  EXPECT_EQ(counts(sc.detections), s.expected_entities);
  EXPECT_TRUE(sc.ocr_regions.empty());
  // Ranked along x: dog on the left, cow in the middle, cat on the right.
  std::map<std::string, double> cx;
  for (const auto& d : sc.detections) cx[d.label] = d.bbox.cx();
  EXPECT_LT(cx["dog"], cx["cow"]);
  EXPECT_LT(cx["cow"], cx["cat"]);
  DetectionResult r;
  r.detections = sc.detections;
  r.width = sc.width;
  r.height = sc.height;
  EXPECT_TRUE(r.violations().empty());
}

TEST(MockScene, EachFailureModeAtProbabilityOne) {
  const SceneSpec s = scene_x();
  for (int mode = 0; mode < 4; ++mode) {
    FailureConfig f;
    (mode == 0 ? f.p_omit : mode == 1 ? f.p_duplicate : mode == 2 ? f.p_swap_position : f.p_text_fallback) = 1.0;
    Rng rng(mode + 10);
    const auto sc = synthesize_scene(s, f, Side::b, rng, "There is a cat.");
    int total = 0;
    for (const auto& [l, n] : counts(sc.detections)) total += n;
    switch (mode) {
      case 0: EXPECT_EQ(total, 2); EXPECT_TRUE(sc.injected.omitted); break;
      case 1: EXPECT_EQ(total, 4); EXPECT_TRUE(sc.injected.duplicated); break;
      case 2: EXPECT_EQ(total, 3); EXPECT_TRUE(sc.injected.swapped); break;
      case 3:
        EXPECT_EQ(total, 0);
        ASSERT_EQ(sc.ocr_regions.size(), 1u);
        EXPECT_EQ(sc.ocr_regions[0].text, "There is a cat.");
        break;
    }
  }
}

TEST(MockScene, SidesSelectWhereFailuresLand) {
  FailureConfig f;
  f.p_omit = 1.0;
  f.sides = FailureSides::b;
  Rng ra(1), rb(1);
  EXPECT_EQ(synthesize_scene(scene_x(), f, Side::a, ra, "").detections.size(), 3u);
  EXPECT_EQ(synthesize_scene(scene_x(), f, Side::b, rb, "").detections.size(), 2u);
  EXPECT_TRUE(f.violations().empty());
  f.p_duplicate = 1.5;
  EXPECT_EQ(f.violations().size(), 1u);
}

TEST(MockScene, StreamsIndependentOfOrder) {
  FailureConfig f;
  f.seed = 5;
  auto r1 = mock_rng(f, "m", "case-1", Side::a);
  auto r2 = mock_rng(f, "m", "case-1", Side::a);
  EXPECT_EQ(r1.next(), r2.next());
  auto r3 = mock_rng(f, "m", "case-1", Side::b);
  auto r4 = mock_rng(f, "m2", "case-1", Side::a);
  auto r0 = mock_rng(f, "m", "case-1", Side::a);
  const auto v = r0.next();
  EXPECT_NE(r3.next(), v);
  EXPECT_NE(r4.next(), v);
}

TEST(MockPipeline, PngCarriesDetectionsForMockDetector) {
  const auto dir = mltest::temp_dir("mockpng");
  const SceneSpec s = scene_x();
  TestCase tc;
  tc.case_id = "associative-x__cat-dog-cow";
  tc.scene = s;
  MockGenerator gen(FailureConfig{}, "mock");
  GenerationRequest req{"There is a cat.", std::nullopt, "mock", false};
  GenerationContext ctx{tc.case_id, Side::a, &tc.scene};
  const ImageRef ref = generate_image(gen, req, ctx, dir / "a.png");
  EXPECT_EQ(ref.sha256, sha256_hex(read_file(dir / "a.png")));
  EXPECT_EQ(ref.backend_name, "mock");

  // Identical bytes on regeneration.
  const ImageRef again = generate_image(gen, req, ctx, dir / "a2.png");
  EXPECT_EQ(again.sha256, ref.sha256);

  MockDetector det;
  const DetectionResult r = detect_objects(det, ref);
  EXPECT_EQ(counts(r.detections), s.expected_entities);
  EXPECT_TRUE(schema_errors(detections_to_wire(r.detections, r.ocr_regions, r.width, r.height)).empty());

  const RgbImage img = decode_png(read_file(dir / "a.png"));
  EXPECT_EQ(img.width(), 512);

  // Tampering with the file is caught before detection.
  write_file(dir / "a.png", tiny_png());
  try {
    detect_objects(det, ref);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::digest_mismatch);
  }
  ImageRef plain = ref;
  plain.sha256.clear();
  try {
    detect_objects(det, plain);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::undecodable_image);
  }
}

TEST(MockScene, MatchesMockSceneHelper) {
  const auto dir = mltest::temp_dir("mockscene");
  FailureConfig f;
  f.p_omit = 0.5;
  f.seed = 17;
  Rng r1 = mock_rng(f, "m", "c", Side::a);
  auto [ref, det] = mock_scene(scene_x(), f, r1, dir / "x.png", "c", Side::a, "prompt");
  Rng r2 = mock_rng(f, "m", "c", Side::a);
  const auto sc = synthesize_scene(scene_x(), f, Side::a, r2, "prompt");
  EXPECT_EQ(det.detections, sc.detections);
  EXPECT_EQ(ref.sha256, sha256_hex(read_file(dir / "x.png")));
}

TEST(DetectionWire, ParsesAndValidates) {
  const std::string good =
      R"({"detections":[{"label":"Dog","score":0.8,"bbox":[1,2,30,40]},{"label":"cat","score":0.1,"bbox":[5,5,9,9]}],"ocr":[{"text":"hi","bbox":[0,0,10,10]}],"width":64,"height":64})";
  const auto raw = parse_detection_wire(good);
  ASSERT_EQ(raw.detections.size(), 2u);
  EXPECT_EQ(raw.detections[0].label, "Dog");
  EXPECT_EQ(raw.ocr_regions.size(), 1u);
  EXPECT_TRUE(schema_errors(json::parse(good)).empty());

  for (const char* bad : {
           R"([])",
           R"({"detections":[],"width":64})",
           R"({"detections":[{"label":"dog","score":1.5,"bbox":[1,2,3,4]}],"width":64,"height":64})",
           R"({"detections":[{"label":"dog","score":0.5,"bbox":[5,2,3,4]}],"width":64,"height":64})",
           R"({"detections":[{"label":"dog","score":0.5,"bbox":[1,2,3]}],"width":64,"height":64})",
           R"({"detections":[],"width":0,"height":64})",
           R"(not json)",
       }) {
    try {
      parse_detection_wire(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::schema) << bad;
    }
  }
  // The schema agrees on the structurally invalid ones.
  EXPECT_FALSE(schema_errors(json::parse(R"({"detections":[],"width":64})")).empty());
  EXPECT_FALSE(schema_errors(json::parse(
      R"({"detections":[{"label":"dog","score":1.5,"bbox":[1,2,3,4]}],"width":64,"height":64})")).empty());
}

TEST(Retry, BackoffScheduleAndClassification) {
  RetryPolicy p;
  EXPECT_EQ(p.backoff(1).count(), 500);
  EXPECT_EQ(p.backoff(2).count(), 1000);
  EXPECT_EQ(p.backoff(3).count(), 2000);
  EXPECT_EQ(p.backoff(10).count(), 8000);

  std::vector<long long> waits;
  int calls = 0;
  auto sleeper = [&](std::chrono::milliseconds d) { waits.push_back(d.count()); };
  const auto out = with_retries(p, [&]() -> std::string {
    if (++calls < 3) throw Error(Errc::transport, "flaky");
    return "ok";
  }, sleeper);
  EXPECT_EQ(out, "ok");
  EXPECT_EQ(waits, (std::vector<long long>{500, 1000}));

  calls = 0;
  EXPECT_THROW(with_retries(p, [&]() -> std::string {
    ++calls;
    throw Error(Errc::auth, "no");
  }, sleeper), Error);
  EXPECT_EQ(calls, 1);

  calls = 0;
  try {
    with_retries(p, [&]() -> std::string {
      ++calls;
      throw Error(Errc::rate_limited, "slow down");
    }, sleeper);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::rate_limited);
  }
  EXPECT_EQ(calls, 4);
}

TEST(RateLimiter, SpacesRequests) {
  RateLimiter lim(60.0 * 50);  // one per 20 ms
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) lim.acquire();
  const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  EXPECT_GE(ms, 95.0);
  RateLimiter off(0);
  off.acquire();
}

TEST(Http, OpenAiProfileWithBase64) {
  LocalServer srv;
  const std::string png = tiny_png();
  std::string seen_body, seen_auth;
  srv.server.Post("/v1/images", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    seen_auth = req.get_header_value("Authorization");
    res.set_content(json{{"data", {{{"b64_json", base64_encode(png)}}}}}.dump(), "application/json");
  });
  ::setenv("METALOGIC_TEST_KEY", "sekrit", 1);
  HttpGenerationOptions o;
  o.name = "oa";
  o.kind = HttpGenerationKind::openai;
  o.endpoint = srv.url("/v1/images");
  o.credential_env = "METALOGIC_TEST_KEY";
  o.model = "dall-e-3";
  o.retry = fast_retry();
  HttpGenerator gen(o);
  GenerationRequest req{"There is a cat.", std::nullopt, "oa", true};
  EXPECT_EQ(gen.generate(req, {"c", Side::a, nullptr}), png);
  const auto body = json::parse(seen_body);
  EXPECT_EQ(body["model"], "dall-e-3");
  EXPECT_EQ(body["n"], 1);
  EXPECT_EQ(body["response_format"], "b64_json");
  EXPECT_EQ(body["prompt"], req.transmitted_prompt());
  EXPECT_EQ(seen_auth, "Bearer sekrit");
}

TEST(Http, SdProfileViaUrlAndSeed) {
  LocalServer srv;
  const std::string png = tiny_png();
  std::string seen_body;
  srv.server.Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    res.set_content(json{{"url", srv.url("/img/1.png")}}.dump(), "application/json");
  });
  srv.server.Get("/img/1.png", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(png, "image/png");
  });
  HttpGenerationOptions o;
  o.name = "sd";
  o.endpoint = srv.url("/gen");
  o.retry = fast_retry();
  HttpGenerator gen(o);
  EXPECT_EQ(gen.generate({"There is a dog.", 42u, "sd", false}, {"c", Side::b, nullptr}), png);
  const auto body = json::parse(seen_body);
  EXPECT_EQ(body["seed"], 42);
  EXPECT_EQ(body["prompt"], "There is a dog.");
  EXPECT_FALSE(body.contains("response_format"));
}

TEST(Http, ErrorClassification) {
  LocalServer srv;
  std::atomic<int> flaky{0};
  srv.server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
    if (flaky++ < 2) {
      res.status = 503;
      return;
    }
    res.set_content(json{{"image_b64", base64_encode("xyz")}}.dump(), "application/json");
  });
  std::atomic<int> limited{0};
  srv.server.Post("/limited", [&](const httplib::Request&, httplib::Response& res) {
    ++limited;
    res.status = 429;
  });
  std::atomic<int> denied{0};
  srv.server.Post("/denied", [&](const httplib::Request&, httplib::Response& res) {
    ++denied;
    res.status = 401;
  });
  srv.server.Post("/policy", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content(R"({"error":{"code":"content_policy_violation"}})", "application/json");
  });

  auto make = [&](const std::string& path) {
    HttpGenerationOptions o;
    o.name = "x";
    o.endpoint = srv.url(path);
    o.retry = fast_retry(3);
    return HttpGenerator(o);
  };
  const GenerationRequest req{"p", std::nullopt, "x", false};
  const GenerationContext ctx{"c", Side::a, nullptr};

  auto g1 = make("/flaky");
  EXPECT_EQ(g1.generate(req, ctx), "xyz");
  EXPECT_EQ(flaky.load(), 3);

  auto code_of = [&](GenerationBackend& g) {
    try {
      g.generate(req, ctx);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io;
  };
  auto g2 = make("/limited");
  EXPECT_EQ(code_of(g2), Errc::rate_limited);
  EXPECT_EQ(limited.load(), 3);
  auto g3 = make("/denied");
  EXPECT_EQ(code_of(g3), Errc::auth);
  EXPECT_EQ(denied.load(), 1);
  auto g4 = make("/policy");
  EXPECT_EQ(code_of(g4), Errc::content_policy);

  HttpGenerationOptions o;
  o.name = "nokey";
  o.endpoint = srv.url("/flaky");
  o.credential_env = "METALOGIC_TEST_UNSET_KEY";
  ::unsetenv("METALOGIC_TEST_UNSET_KEY");
  HttpGenerator g5(o);
  EXPECT_EQ(code_of(g5), Errc::auth);

  HttpGenerationOptions dead;
  dead.name = "dead";
  dead.endpoint = "http://127.0.0.1:1/none";
  dead.retry = fast_retry(2);
  dead.timeout = std::chrono::seconds(2);
  HttpGenerator g6(dead);
  EXPECT_EQ(code_of(g6), Errc::transport);
}

TEST(Http, DetectorRoundTripAndThreshold) {
  LocalServer srv;
  std::string seen_type;
  std::size_t seen_size = 0;
  srv.server.Post("/detect", [&](const httplib::Request& req, httplib::Response& res) {
    seen_type = req.get_header_value("Content-Type");
    seen_size = req.body.size();
    res.set_content(
        R"({"detections":[{"label":"puppy","score":0.9,"bbox":[1,1,4,4]},{"label":"cat","score":0.2,"bbox":[2,2,5,5]},{"label":"cow","score":0.95,"bbox":[6,6,12,12]}],"ocr":[],"width":8,"height":8})",
        "application/json");
  });
  srv.server.Post("/broken", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
  });
  const auto dir = mltest::temp_dir("httpdet");
  const std::string png = tiny_png();
  write_file(dir / "a.png", png);
  ImageRef ref{"c", Side::a, "a.png", sha256_hex(png), "x", 0, std::nullopt};

  HttpDetectionOptions o;
  o.endpoint = srv.url("/detect");
  o.retry = fast_retry();
  HttpDetector det(o);
  const auto r = detect_objects(det, ref, 0.30, dir);
  EXPECT_EQ(seen_type, "image/png");
  EXPECT_EQ(seen_size, png.size());
  ASSERT_EQ(r.detections.size(), 2u);
  EXPECT_EQ(r.detections[0].label, "puppy");  // verbatim
  EXPECT_EQ(r.detections[1].bbox, (BBox{6, 6, 8, 8}));  // clipped to the image
  EXPECT_TRUE(r.violations().empty());

  o.endpoint = srv.url("/broken");
  HttpDetector broken(o);
  try {
    detect_objects(broken, ref, 0.30, dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::undecodable_image);
  }
}

TEST(Image, PngRoundTripAndText) {
  RgbImage img(20, 10, {1, 2, 3});
  img.fill_rect(2, 2, 6, 6, {200, 0, 0});
  const auto bytes = encode_png(img, {{"k", "v"}});
  EXPECT_EQ(encode_png(img, {{"k", "v"}}), bytes);
  const auto back = decode_png(bytes);
  EXPECT_EQ(back.at(3, 3).r, 200);
  EXPECT_EQ(back.at(0, 0).b, 3);
  EXPECT_EQ(png_text(bytes, "k"), "v");
  EXPECT_FALSE(png_text(bytes, "missing"));
  EXPECT_THROW(png_text("nope", "k"), Error);
  EXPECT_EQ(base64_decode(base64_encode("hello!?")), "hello!?");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
