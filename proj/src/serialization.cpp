#include "metalogic/serialization.hpp"

#include "metalogic/errors.hpp"

namespace metalogic {

namespace {

template <typename T, typename Parse>
T parse_enum(const json& j, std::string_view what, Parse parse) {
  const auto s = j.get<std::string>();
  auto v = parse(s);
  if (!v) throw Error(Errc::schema, "unknown " + std::string(what) + " '" + s + "'");
  return *v;
}

std::optional<Side> side_from_string(std::string_view s) {
  if (s == "a") return Side::a;
  if (s == "b") return Side::b;
  return std::nullopt;
}

std::optional<Order> order_from_string(std::string_view s) {
  for (auto o : {Order::before, Order::after, Order::tied}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

std::optional<CaseStatus> status_from_string(std::string_view s) {
  for (auto c : {CaseStatus::aligned, CaseStatus::misaligned, CaseStatus::errored}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<FailureSides> sides_from_string(std::string_view s) {
  if (s == "both") return FailureSides::both;
  if (s == "a") return FailureSides::a;
  if (s == "b") return FailureSides::b;
  return std::nullopt;
}

std::string_view to_string(FailureSides s) {
  switch (s) {
    case FailureSides::both: return "both";
    case FailureSides::a: return "a";
    case FailureSides::b: return "b";
  }
  return "both";
}

}  // namespace

// --- templates / suite -------------------------------------------------------

void to_json(json& j, const SceneSpec& s) {
  j = json::object();
  j["expected_entities"] = s.expected_entities;
  if (s.axis) {
    j["axis"] = to_string(*s.axis);
    json rels = json::array();
    for (const auto& r : s.expected_relations.value_or(std::vector<ExpectedRelation>{})) {
      rels.push_back({{"subject", r.subject},
                      {"object", r.object},
                      {"relation", to_string(r.relation)}});
    }
    j["expected_relations"] = std::move(rels);
  }
}

void from_json(const json& j, SceneSpec& s) {
  s = SceneSpec{};
  s.expected_entities = j.at("expected_entities").get<std::map<std::string, int>>();
  if (j.contains("axis")) {
    s.axis = parse_enum<Axis>(j.at("axis"), "axis", axis_from_string);
    std::vector<ExpectedRelation> rels;
    for (const auto& r : j.at("expected_relations")) {
      rels.push_back({r.at("subject").get<std::string>(), r.at("object").get<std::string>(),
                      parse_enum<Relation>(r.at("relation"), "relation",
                                           relation_from_string)});
    }
    s.expected_relations = std::move(rels);
  }
}

void to_json(json& j, const SuiteConfig& c) {
  j = json{{"vocabulary", c.vocabulary},
           {"laws", c.laws},
           {"modifiers", c.modifiers},
           {"numbering_entities", c.numbering_entities},
           {"counts", {c.count_min, c.count_max}},
           {"seed", c.seed}};
  j["max_cases_per_category"] =
      c.max_cases_per_category ? json(*c.max_cases_per_category) : json(nullptr);
}

void from_json(const json& j, SuiteConfig& c) {
  c = SuiteConfig{};
  if (j.contains("vocabulary")) c.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  if (j.contains("laws")) c.laws = j.at("laws").get<std::vector<std::string>>();
  if (j.contains("modifiers")) c.modifiers = j.at("modifiers").get<std::vector<std::string>>();
  if (j.contains("numbering_entities")) {
    c.numbering_entities = j.at("numbering_entities").get<std::vector<std::string>>();
  }
  if (j.contains("counts")) {
    const auto& r = j.at("counts");
    c.count_min = r.at(0).get<int>();
    c.count_max = r.at(1).get<int>();
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("max_cases_per_category") && !j.at("max_cases_per_category").is_null()) {
    c.max_cases_per_category = j.at("max_cases_per_category").get<std::size_t>();
  }
}

void to_json(json& j, const TestCase& t) {
  j = json{{"case_id", t.case_id},
           {"template_id", t.template_id},
           {"law", to_string(t.law)},
           {"modifier", to_string(t.modifier)},
           {"entities", t.entities},
           {"prompt_a", t.prompt_a},
           {"prompt_b", t.prompt_b},
           {"scene", t.scene}};
  j["count"] = t.count ? json(*t.count) : json(nullptr);
  if (t.numbered_entity) j["numbered_entity"] = *t.numbered_entity;
}

void from_json(const json& j, TestCase& t) {
  t = TestCase{};
  t.case_id = j.at("case_id").get<std::string>();
  t.template_id = j.at("template_id").get<std::string>();
  t.law = parse_enum<Law>(j.at("law"), "law", law_from_string);
  t.modifier = parse_enum<Modifier>(j.at("modifier"), "modifier", modifier_from_string);
  t.entities = j.at("entities").get<std::vector<std::string>>();
  if (j.contains("count") && !j.at("count").is_null()) t.count = j.at("count").get<int>();
  t.prompt_a = j.at("prompt_a").get<std::string>();
  t.prompt_b = j.at("prompt_b").get<std::string>();
  t.scene = j.at("scene").get<SceneSpec>();
  if (j.contains("numbered_entity")) {
    t.numbered_entity = j.at("numbered_entity").get<std::string>();
  }
}

// --- backends ----------------------------------------------------------------

void to_json(json& j, const BBox& b) { j = json::array({b.x1, b.y1, b.x2, b.y2}); }

void from_json(const json& j, BBox& b) {
  if (!j.is_array() || j.size() != 4) throw Error(Errc::schema, "bbox must be [x1,y1,x2,y2]");
  b = BBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(json& j, const ImageRef& r) {
  j = json{{"case_id", r.case_id},
           {"side", to_string(r.side)},
           {"path", r.path.generic_string()},
           {"sha256", r.sha256},
           {"backend", r.backend_name},
           {"latency_ms", r.latency_ms}};
  j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
}

void from_json(const json& j, ImageRef& r) {
  r = ImageRef{};
  r.case_id = j.at("case_id").get<std::string>();
  r.side = parse_enum<Side>(j.at("side"), "side", side_from_string);
  r.path = j.at("path").get<std::string>();
  r.sha256 = j.at("sha256").get<std::string>();
  r.backend_name = j.at("backend").get<std::string>();
  r.latency_ms = j.value("latency_ms", 0.0);
  if (j.contains("seed") && !j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint32_t>();
}

json detections_to_wire(const std::vector<Detection>& dets, const std::vector<OcrRegion>& ocr,
                        int width, int height) {
  json d = json::array();
  for (const auto& x : dets) {
    d.push_back({{"label", x.label}, {"score", x.score}, {"bbox", x.bbox}});
  }
  json o = json::array();
  for (const auto& x : ocr) o.push_back({{"text", x.text}, {"bbox", x.bbox}});
  return json{{"detections", std::move(d)}, {"ocr", std::move(o)}, {"width", width},
              {"height", height}};
}

void to_json(json& j, const DetectionResult& d) {
  j = detections_to_wire(d.detections, d.ocr_regions, d.width, d.height);
  j["image"] = d.image;
}

void from_json(const json& j, DetectionResult& d) {
  d = DetectionResult{};
  d.image = j.at("image").get<ImageRef>();
  for (const auto& x : j.at("detections")) {
    d.detections.push_back(
        {x.at("label").get<std::string>(), x.at("score").get<double>(), x.at("bbox").get<BBox>()});
  }
  if (j.contains("ocr")) {
    for (const auto& x : j.at("ocr")) {
      d.ocr_regions.push_back({x.at("text").get<std::string>(), x.at("bbox").get<BBox>()});
    }
  }
  d.width = j.at("width").get<int>();
  d.height = j.at("height").get<int>();
}

void to_json(json& j, const FailureConfig& f) {
  j = json{{"p_omit", f.p_omit},
           {"p_duplicate", f.p_duplicate},
           {"p_swap_position", f.p_swap_position},
           {"p_text_fallback", f.p_text_fallback},
           {"seed", f.seed},
           {"sides", to_string(f.sides)}};
}

void from_json(const json& j, FailureConfig& f) {
  f = FailureConfig{};
  f.p_omit = j.value("p_omit", 0.0);
  f.p_duplicate = j.value("p_duplicate", 0.0);
  f.p_swap_position = j.value("p_swap_position", 0.0);
  f.p_text_fallback = j.value("p_text_fallback", 0.0);
  f.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("sides")) {
    f.sides = parse_enum<FailureSides>(j.at("sides"), "failure sides", sides_from_string);
  }
}

// --- verdicts ----------------------------------------------------------------

void to_json(json& j, const Verdict& v) {
  json presence = json::object();
  for (const auto& [label, counts] : v.presence_diff) {
    presence[label] = json::array({counts.first, counts.second});
  }
  json position = json::array();
  for (const auto& c : v.position_diff) {
    position.push_back({{"label_i", c.label_i},
                        {"instance_i", c.instance_i},
                        {"label_j", c.label_j},
                        {"instance_j", c.instance_j},
                        {"order_a", to_string(c.order_a)},
                        {"order_b", to_string(c.order_b)}});
  }
  json cats = json::array();
  for (auto c : v.categories) cats.push_back(to_string(c));
  j = json{{"case_id", v.case_id},          {"aligned", v.aligned},
           {"presence_diff", presence},     {"position_diff", position},
           {"categories", cats},            {"uncategorized", v.uncategorized},
           {"notes", v.notes}};
}

void from_json(const json& j, Verdict& v) {
  v = Verdict{};
  v.case_id = j.at("case_id").get<std::string>();
  v.aligned = j.at("aligned").get<bool>();
  for (const auto& [label, counts] : j.at("presence_diff").items()) {
    v.presence_diff[label] = {counts.at(0).get<int>(), counts.at(1).get<int>()};
  }
  for (const auto& c : j.at("position_diff")) {
    v.position_diff.push_back(
        {c.at("label_i").get<std::string>(), c.at("instance_i").get<int>(),
         c.at("label_j").get<std::string>(), c.at("instance_j").get<int>(),
         parse_enum<Order>(c.at("order_a"), "order", order_from_string),
         parse_enum<Order>(c.at("order_b"), "order", order_from_string)});
  }
  for (const auto& c : j.at("categories")) {
    v.categories.push_back(parse_enum<ErrorCategory>(c, "category", category_from_string));
  }
  v.uncategorized = j.value("uncategorized", false);
  v.notes = j.value("notes", std::vector<std::string>{});
}

void to_json(json& j, const VerdictRecord& r) {
  j = r.verdict;
  j["schema_version"] = kVerdictSchemaVersion;
  j["model"] = r.model;
  j["status"] = to_string(r.status);
  if (r.status == CaseStatus::errored) j["error"] = r.error;
}

void from_json(const json& j, VerdictRecord& r) {
  r = VerdictRecord{};
  const int version = j.value("schema_version", 0);
  if (version != kVerdictSchemaVersion) {
    throw Error(Errc::schema, "unsupported verdict schema_version " + std::to_string(version));
  }
  r.verdict = j.get<Verdict>();
  r.model = j.at("model").get<std::string>();
  r.status = parse_enum<CaseStatus>(j.at("status"), "status", status_from_string);
  r.error = j.value("error", std::string{});
}

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

}  // namespace metalogic
