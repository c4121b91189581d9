#include "metalogic/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "metalogic/errors.hpp"
#include "metalogic/image.hpp"

namespace metalogic {

std::string_view to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
    case ReportFormat::html: return "html";
  }
  return "json";
}

namespace {

std::string escape_pointer(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

// Collects violations while reading; every accessor leaves the target
// untouched when the key is absent or malformed.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& ptr, const std::string& msg) {
    errors.push_back((ptr.empty() ? "/" : ptr) + ": " + msg);
  }

  bool object(const json& j, const std::string& ptr) {
    if (j.is_object()) return true;
    fail(ptr, "expected an object");
    return false;
  }

  void keys(const json& j, const std::string& ptr, std::initializer_list<std::string_view> allowed) {
    for (const auto& [k, v] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        fail(ptr + "/" + escape_pointer(k), "unknown key");
      }
    }
  }

  const json* field(const json& j, std::string_view key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  static std::string at(const std::string& ptr, std::string_view key) {
    return ptr + "/" + escape_pointer(key);
  }

  void str(const json& j, const std::string& ptr, std::string_view key, std::string& out) {
    if (auto* v = field(j, key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        fail(at(ptr, key), "expected a string");
      }
    }
  }

  void boolean(const json& j, const std::string& ptr, std::string_view key, bool& out) {
    if (auto* v = field(j, key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        fail(at(ptr, key), "expected true or false");
      }
    }
  }

  template <typename Int>
  void integer(const json& j, const std::string& ptr, std::string_view key, Int& out,
               long long lo, long long hi) {
    if (auto* v = field(j, key)) {
      if (!v->is_number_integer()) {
        fail(at(ptr, key), "expected an integer");
        return;
      }
      if (v->is_number_unsigned() && v->get<unsigned long long>() > static_cast<unsigned long long>(hi)) {
        fail(at(ptr, key), "out of range");
        return;
      }
      const long long x = v->is_number_unsigned() ? static_cast<long long>(v->get<unsigned long long>())
                                                  : v->get<long long>();
      if (x < lo || x > hi) {
        fail(at(ptr, key), "must lie in [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
        return;
      }
      out = static_cast<Int>(x);
    }
  }

  void u64(const json& j, const std::string& ptr, std::string_view key, std::uint64_t& out) {
    if (auto* v = field(j, key)) {
      if (v->is_number_unsigned()) {
        out = v->get<std::uint64_t>();
      } else if (v->is_number_integer() && v->get<long long>() >= 0) {
        out = static_cast<std::uint64_t>(v->get<long long>());
      } else {
        fail(at(ptr, key), "expected a non-negative integer");
      }
    }
  }

  void number(const json& j, const std::string& ptr, std::string_view key, double& out, double lo,
              double hi) {
    if (auto* v = field(j, key)) {
      if (!v->is_number()) {
        fail(at(ptr, key), "expected a number");
        return;
      }
      const double x = v->get<double>();
      if (!(x >= lo && x <= hi)) {
        fail(at(ptr, key), "must lie in [" + json(lo).dump() + "," + json(hi).dump() + "]");
        return;
      }
      out = x;
    }
  }

  void strings(const json& j, const std::string& ptr, std::string_view key,
               std::vector<std::string>& out) {
    if (auto* v = field(j, key)) {
      if (!v->is_array()) {
        fail(at(ptr, key), "expected an array of strings");
        return;
      }
      std::vector<std::string> tmp;
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) {
          fail(at(ptr, key) + "/" + std::to_string(i), "expected a string");
        } else {
          tmp.push_back((*v)[i].get<std::string>());
        }
      }
      out = std::move(tmp);
    }
  }

  void retry(const json& j, const std::string& ptr, RetryPolicy& out) {
    if (!object(j, ptr)) return;
    keys(j, ptr, {"max_attempts", "initial_backoff_ms", "multiplier", "max_backoff_ms"});
    integer(j, ptr, "max_attempts", out.max_attempts, 1, 100);
    long long ms = out.initial_backoff.count();
    integer(j, ptr, "initial_backoff_ms", ms, 0, 3'600'000);
    out.initial_backoff = std::chrono::milliseconds(ms);
    number(j, ptr, "multiplier", out.multiplier, 1.0, 100.0);
    ms = out.max_backoff.count();
    integer(j, ptr, "max_backoff_ms", ms, 0, 3'600'000);
    out.max_backoff = std::chrono::milliseconds(ms);
  }
};

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
      return false;
    }
  }
  return s != "." && s != "..";
}

void read_suite(Reader& r, const json& j, SuiteConfig& s) {
  const std::string ptr = "/suite";
  if (!r.object(j, ptr)) return;
  r.keys(j, ptr, {"vocabulary", "laws", "modifiers", "numbering_entities", "counts",
                  "max_cases_per_category", "seed"});
  r.strings(j, ptr, "vocabulary", s.vocabulary);
  r.strings(j, ptr, "laws", s.laws);
  r.strings(j, ptr, "modifiers", s.modifiers);
  r.strings(j, ptr, "numbering_entities", s.numbering_entities);
  if (auto* c = r.field(j, "counts")) {
    if (c->is_array() && c->size() == 2 && (*c)[0].is_number_integer() &&
        (*c)[1].is_number_integer()) {
      s.count_min = (*c)[0].get<int>();
      s.count_max = (*c)[1].get<int>();
    } else {
      r.fail(ptr + "/counts", "expected [min, max]");
    }
  }
  if (auto* m = r.field(j, "max_cases_per_category"); m && !m->is_null()) {
    std::size_t cap = 0;
    r.integer(j, ptr, "max_cases_per_category", cap, 1, 1'000'000);
    if (cap) s.max_cases_per_category = cap;
  }
  r.u64(j, ptr, "seed", s.seed);
}

void read_generator(Reader& r, const json& j, const std::string& ptr, GeneratorProfile& g) {
  if (!r.object(j, ptr)) return;
  r.keys(j, ptr, {"name", "kind", "literal_prefix", "seed", "failures", "width", "height",
                  "endpoint", "credential_env", "model", "size", "requests_per_minute",
                  "timeout_s", "retry"});
  r.str(j, ptr, "name", g.name);
  if (!valid_name(g.name)) r.fail(ptr + "/name", "required; letters, digits, '-', '_', '.'");
  std::string kind = "mock";
  r.str(j, ptr, "kind", kind);
  if (kind == "mock") {
    g.kind = GeneratorKind::mock;
  } else if (kind == "openai") {
    g.kind = GeneratorKind::openai;
  } else if (kind == "sd") {
    g.kind = GeneratorKind::sd;
  } else {
    r.fail(ptr + "/kind", "must be one of mock, openai, sd");
  }
  r.boolean(j, ptr, "literal_prefix", g.literal_prefix);
  if (auto* s = r.field(j, "seed"); s && !s->is_null()) {
    std::uint32_t seed = 0;
    r.integer(j, ptr, "seed", seed, 0, 0xffffffffLL);
    g.seed = seed;
  }
  if (auto* f = r.field(j, "failures")) {
    const std::string fp = ptr + "/failures";
    if (r.object(*f, fp)) {
      r.keys(*f, fp, {"p_omit", "p_duplicate", "p_swap_position", "p_text_fallback", "seed",
                      "sides"});
      r.number(*f, fp, "p_omit", g.failures.p_omit, 0.0, 1.0);
      r.number(*f, fp, "p_duplicate", g.failures.p_duplicate, 0.0, 1.0);
      r.number(*f, fp, "p_swap_position", g.failures.p_swap_position, 0.0, 1.0);
      r.number(*f, fp, "p_text_fallback", g.failures.p_text_fallback, 0.0, 1.0);
      r.u64(*f, fp, "seed", g.failures.seed);
      std::string sides = "both";
      r.str(*f, fp, "sides", sides);
      if (sides == "both") {
        g.failures.sides = FailureSides::both;
      } else if (sides == "a") {
        g.failures.sides = FailureSides::a;
      } else if (sides == "b") {
        g.failures.sides = FailureSides::b;
      } else {
        r.fail(fp + "/sides", "must be one of both, a, b");
      }
    }
  }
  r.integer(j, ptr, "width", g.width, 16, 8192);
  r.integer(j, ptr, "height", g.height, 16, 8192);

  auto& h = g.http;
  h.name = g.name;
  h.kind = g.kind == GeneratorKind::openai ? HttpGenerationKind::openai : HttpGenerationKind::sd;
  r.str(j, ptr, "endpoint", h.endpoint);
  r.str(j, ptr, "credential_env", h.credential_env);
  r.str(j, ptr, "model", h.model);
  r.str(j, ptr, "size", h.size);
  r.number(j, ptr, "requests_per_minute", h.requests_per_minute, 0.0, 1e6);
  long long timeout = h.timeout.count();
  r.integer(j, ptr, "timeout_s", timeout, 1, 3600);
  h.timeout = std::chrono::seconds(timeout);
  if (auto* rt = r.field(j, "retry")) r.retry(*rt, ptr + "/retry", h.retry);
  if (g.kind != GeneratorKind::mock) {
    if (h.endpoint.find("://") == std::string::npos) {
      r.fail(ptr + "/endpoint", "required URL for HTTP profiles");
    }
  }
}

void read_detector(Reader& r, const json& j, DetectorProfile& d) {
  const std::string ptr = "/backends/detection";
  if (!r.object(j, ptr)) return;
  r.keys(j, ptr, {"kind", "endpoint", "credential_env", "score_threshold",
                  "requests_per_minute", "timeout_s", "retry"});
  std::string kind = "mock";
  r.str(j, ptr, "kind", kind);
  if (kind == "mock") {
    d.kind = DetectorKind::mock;
  } else if (kind == "http") {
    d.kind = DetectorKind::http;
  } else {
    r.fail(ptr + "/kind", "must be one of mock, http");
  }
  r.number(j, ptr, "score_threshold", d.score_threshold, 0.0, 1.0);
  r.str(j, ptr, "endpoint", d.http.endpoint);
  r.str(j, ptr, "credential_env", d.http.credential_env);
  r.number(j, ptr, "requests_per_minute", d.http.requests_per_minute, 0.0, 1e6);
  long long timeout = d.http.timeout.count();
  r.integer(j, ptr, "timeout_s", timeout, 1, 3600);
  d.http.timeout = std::chrono::seconds(timeout);
  if (auto* rt = r.field(j, "retry")) r.retry(*rt, ptr + "/retry", d.http.retry);
  if (d.kind == DetectorKind::http && d.http.endpoint.find("://") == std::string::npos) {
    r.fail(ptr + "/endpoint", "required URL for the http detector");
  }
}

}  // namespace

RunConfig parse_config(const json& j) {
  Reader r;
  RunConfig c;
  if (!r.object(j, "")) throw ConfigError(std::move(r.errors));
  r.keys(j, "", {"run_id", "output_dir", "suite", "backends", "comparator", "classifier",
                 "report", "concurrency", "log_level"});
  r.str(j, "", "run_id", c.run_id);
  if (!valid_name(c.run_id)) r.fail("/run_id", "letters, digits, '-', '_', '.' only");
  std::string out = c.output_dir.string();
  r.str(j, "", "output_dir", out);
  if (out.empty()) r.fail("/output_dir", "must not be empty");
  c.output_dir = out;
  if (auto* s = r.field(j, "suite")) read_suite(r, *s, c.suite);
  for (const auto& v : c.suite.violations()) r.errors.push_back("/suite/" + v);

  const json* backends = r.field(j, "backends");
  if (!backends) {
    r.fail("/backends", "required");
  } else if (r.object(*backends, "/backends")) {
    r.keys(*backends, "/backends", {"generation", "detection"});
    const json* gens = r.field(*backends, "generation");
    if (!gens || !gens->is_array() || gens->empty()) {
      r.fail("/backends/generation", "needs at least one generation profile");
    } else {
      std::set<std::string> names;
      for (std::size_t i = 0; i < gens->size(); ++i) {
        const std::string ptr = "/backends/generation/" + std::to_string(i);
        GeneratorProfile g;
        read_generator(r, (*gens)[i], ptr, g);
        if (!g.name.empty() && !names.insert(g.name).second) {
          r.fail(ptr + "/name", "duplicate profile name '" + g.name + "'");
        }
        c.generators.push_back(std::move(g));
      }
    }
    if (auto* d = r.field(*backends, "detection")) {
      read_detector(r, *d, c.detector);
    } else {
      r.fail("/backends/detection", "needs a detection profile");
    }
  }

  if (auto* cmp = r.field(j, "comparator")) {
    if (r.object(*cmp, "/comparator")) {
      r.keys(*cmp, "/comparator", {"epsilon_fraction", "extra_label_mode", "synonyms"});
      r.number(*cmp, "/comparator", "epsilon_fraction", c.comparator.epsilon_fraction, 0.0, 0.5);
      std::string mode = "count";
      r.str(*cmp, "/comparator", "extra_label_mode", mode);
      if (mode == "count") {
        c.comparator.extra_mode = ExtraLabelMode::count;
      } else if (mode == "ignore") {
        c.comparator.extra_mode = ExtraLabelMode::ignore;
      } else {
        r.fail("/comparator/extra_label_mode", "must be count or ignore");
      }
      if (auto* syn = r.field(*cmp, "synonyms")) {
        if (!syn->is_object()) {
          r.fail("/comparator/synonyms", "expected an object of label -> canonical label");
        } else {
          auto table = default_synonyms();
          for (const auto& [k, v] : syn->items()) {
            if (!v.is_string()) {
              r.fail("/comparator/synonyms/" + escape_pointer(k), "expected a string");
            } else {
              table[k] = v.get<std::string>();
            }
          }
          c.comparator.normalizer = LabelNormalizer(std::move(table));
        }
      }
    }
  }

  if (auto* cls = r.field(j, "classifier")) {
    if (r.object(*cls, "/classifier")) {
      r.keys(*cls, "/classifier", {"ocr_area_fraction", "ocr_prompt_words"});
      r.number(*cls, "/classifier", "ocr_area_fraction", c.classifier.ocr_area_fraction, 0.0, 1.0);
      r.integer(*cls, "/classifier", "ocr_prompt_words", c.classifier.ocr_prompt_words, 1, 1000);
    }
  }

  if (auto* rep = r.field(j, "report")) {
    if (r.object(*rep, "/report")) {
      r.keys(*rep, "/report", {"formats"});
      std::vector<std::string> formats;
      r.strings(*rep, "/report", "formats", formats);
      if (r.field(*rep, "formats")) {
        c.formats.clear();
        for (std::size_t i = 0; i < formats.size(); ++i) {
          if (formats[i] == "json") {
            c.formats.push_back(ReportFormat::json);
          } else if (formats[i] == "csv") {
            c.formats.push_back(ReportFormat::csv);
          } else if (formats[i] == "html") {
            c.formats.push_back(ReportFormat::html);
          } else {
            r.fail("/report/formats/" + std::to_string(i), "must be json, csv or html");
          }
        }
      }
    }
  }

  r.integer(j, "", "concurrency", c.concurrency, 1, 256);
  r.str(j, "", "log_level", c.log_level);
  if (c.log_level != "trace" && c.log_level != "debug" && c.log_level != "info" &&
      c.log_level != "warn" && c.log_level != "error") {
    r.fail("/log_level", "must be trace, debug, info, warn or error");
  }

  if (!r.errors.empty()) throw ConfigError(std::move(r.errors));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": byte " + std::to_string(e.byte) + ": " + e.what()});
  }
  return parse_config(j);
}

std::unique_ptr<GenerationBackend> make_generator(const GeneratorProfile& p) {
  if (p.kind == GeneratorKind::mock) {
    return std::make_unique<MockGenerator>(p.failures, p.name, p.width, p.height);
  }
  return std::make_unique<HttpGenerator>(p.http);
}

std::unique_ptr<DetectionBackend> make_detector(const DetectorProfile& p) {
  if (p.kind == DetectorKind::mock) return std::make_unique<MockDetector>();
  return std::make_unique<HttpDetector>(p.http);
}

}  // namespace metalogic
