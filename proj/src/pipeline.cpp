#include "metalogic/pipeline.hpp"

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

#include "metalogic/errors.hpp"
#include "metalogic/image.hpp"
#include "metalogic/kernels.hpp"

namespace metalogic {

namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::gen_suite: return "gen-suite";
    case Stage::generate: return "generate";
    case Stage::detect: return "detect";
    case Stage::compare: return "compare";
    case Stage::report: return "report";
  }
  return "";
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (auto st : all_stages()) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::set<Stage> all_stages() {
  return {Stage::gen_suite, Stage::generate, Stage::detect, Stage::compare, Stage::report};
}

std::set<Stage> parse_stages(std::string_view list) {
  std::set<Stage> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    auto name = list.substr(start, end - start);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (name == "all") {
      out = all_stages();
    } else if (auto st = stage_from_string(name)) {
      out.insert(*st);
    } else {
      throw ConfigError({"--stages: unknown stage '" + std::string(name) + "'"});
    }
    start = end + 1;
  }
  return out;
}

namespace {

fs::path case_dir(const fs::path& root, std::string_view kind, std::string_view model,
                  std::string_view case_id) {
  return root / kind / std::string(model) / std::string(case_id);
}

}  // namespace

fs::path RunPaths::image(std::string_view model, std::string_view case_id, Side s) const {
  return case_dir(root, "images", model, case_id) / (std::string(to_string(s)) + ".png");
}
fs::path RunPaths::image_ref(std::string_view model, std::string_view case_id, Side s) const {
  return case_dir(root, "images", model, case_id) / (std::string(to_string(s)) + ".ref.json");
}
fs::path RunPaths::image_error(std::string_view model, std::string_view case_id, Side s) const {
  return case_dir(root, "images", model, case_id) / (std::string(to_string(s)) + ".error.json");
}
fs::path RunPaths::detection(std::string_view model, std::string_view case_id, Side s) const {
  return case_dir(root, "detections", model, case_id) / (std::string(to_string(s)) + ".json");
}
fs::path RunPaths::detection_error(std::string_view model, std::string_view case_id,
                                   Side s) const {
  return case_dir(root, "detections", model, case_id) /
         (std::string(to_string(s)) + ".error.json");
}

std::vector<VerdictRecord> read_verdicts(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_stage_input, "cannot read " + path.string());
  std::vector<VerdictRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<VerdictRecord>());
    } catch (const json::exception& e) {
      throw Error(Errc::schema, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

constexpr Side kSides[] = {Side::a, Side::b};

// Installs the run logger for the duration of a pipeline call.
class LogScope {
 public:
  LogScope(const RunConfig& config, const RunPaths& paths, bool file_log)
      : previous_(spdlog::default_logger()) {
    auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
    console->set_level(spdlog::level::warn);
    std::vector<spdlog::sink_ptr> sinks{console};
    if (file_log) {
      auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(paths.log().string());
      file->set_level(spdlog::level::trace);
      sinks.push_back(file);
    }
    auto logger = std::make_shared<spdlog::logger>("metalogic", sinks.begin(), sinks.end());
    logger->set_level(spdlog::level::from_str(config.log_level));
    spdlog::set_default_logger(logger);
  }
  ~LogScope() {
    spdlog::default_logger()->flush();
    spdlog::set_default_logger(previous_);
  }
  LogScope(const LogScope&) = delete;
  LogScope& operator=(const LogScope&) = delete;

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

void write_json(const fs::path& p, const json& j) { write_file(p, dump_line(j) + "\n"); }

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw Error(Errc::schema, p.string() + ": " + e.what());
  }
}

// A stored ref only counts when the image it points at is still on disk.
bool image_present(const RunPaths& paths, const fs::path& ref_path) {
  if (!fs::exists(ref_path)) return false;
  try {
    return fs::exists(paths.root / read_json(ref_path).get<ImageRef>().path);
  } catch (const std::exception&) {
    return false;
  }
}

// Detections are stale when the image was regenerated after them.
bool detection_current(const fs::path& det_path, const fs::path& ref_path) {
  if (!fs::exists(det_path) || !fs::exists(ref_path)) return false;
  try {
    return read_json(det_path).get<DetectionResult>().image.sha256 ==
           read_json(ref_path).get<ImageRef>().sha256;
  } catch (const std::exception&) {
    return false;
  }
}

void remove_if_exists(const fs::path& p) {
  std::error_code ec;
  fs::remove(p, ec);
}

json error_record(const std::string& model, const std::string& case_id, Side side,
                  const std::string& stage, const Error& e) {
  return json{{"model", model},
              {"case_id", case_id},
              {"side", to_string(side)},
              {"stage", stage},
              {"code", to_string(e.code())},
              {"message", e.what()}};
}

Manifest load_manifest(const RunPaths& paths) {
  std::ifstream in(paths.suite());
  if (!in) {
    throw Error(Errc::missing_stage_input,
                paths.suite().string() + " is missing; run the gen-suite stage first");
  }
  return read_manifest(in);
}

Manifest stage_gen_suite(const RunConfig& config, const RunPaths& paths, bool force) {
  if (!force && fs::exists(paths.suite())) {
    Manifest existing = load_manifest(paths);
    if (existing.config == config.suite) {
      spdlog::info("gen-suite: {} cases already present", existing.cases.size());
      return existing;
    }
    spdlog::warn("gen-suite: suite config changed; regenerating {}", paths.suite().string());
  }
  Manifest m;
  m.config = config.suite;
  m.cases = generate_suite(config.suite);
  m.reindex();
  std::ostringstream out;
  write_manifest(out, m.config, m.cases);
  write_file(paths.suite(), out.str());
  spdlog::info("gen-suite: wrote {} cases", m.cases.size());
  return m;
}

struct WorkItem {
  std::size_t model;
  std::size_t tc;
  Side side;
};

std::vector<WorkItem> work_items(const RunConfig& config, const Manifest& m) {
  std::vector<WorkItem> items;
  for (std::size_t g = 0; g < config.generators.size(); ++g) {
    for (std::size_t c = 0; c < m.cases.size(); ++c) {
      for (Side s : kSides) items.push_back({g, c, s});
    }
  }
  return items;
}

void stage_generate(const RunConfig& config, const RunPaths& paths, const Manifest& m,
                    bool force, PipelineSummary& summary) {
  std::vector<std::unique_ptr<GenerationBackend>> backends;
  for (const auto& g : config.generators) backends.push_back(make_generator(g));
  const auto items = work_items(config, m);
  int generated = 0, skipped = 0;
  const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.concurrency) \
    reduction(+ : generated, skipped)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& it = items[static_cast<std::size_t>(i)];
    const auto& profile = config.generators[it.model];
    const TestCase& tc = m.cases[it.tc];
    const auto ref_path = paths.image_ref(profile.name, tc.case_id, it.side);
    if (!force && image_present(paths, ref_path)) {
      ++skipped;
      continue;
    }
    GenerationRequest req{it.side == Side::a ? tc.prompt_a : tc.prompt_b, profile.seed,
                          profile.name, profile.literal_prefix};
    GenerationContext ctx{tc.case_id, it.side, &tc.scene};
    const auto err_path = paths.image_error(profile.name, tc.case_id, it.side);
    try {
      auto path = paths.image(profile.name, tc.case_id, it.side);
      ImageRef ref = generate_image(*backends[it.model], req, ctx, path);
      if (!looks_like_png(read_file(path))) {
        auto jpg = fs::path(path).replace_extension(".jpg");
        fs::rename(path, jpg);
        path = jpg;
      }
      ref.path = fs::relative(path, paths.root);
      // Latency varies between runs and would break byte-stable artifacts.
      ref.latency_ms = 0.0;
      write_json(ref_path, ref);
      remove_if_exists(err_path);
      spdlog::info("generate {} {} {}: ok", profile.name, tc.case_id, to_string(it.side));
      ++generated;
    } catch (const Error& e) {
      spdlog::warn("generate {} {} {}: {}", profile.name, tc.case_id, to_string(it.side),
                   e.what());
      try {
        write_json(err_path, error_record(profile.name, tc.case_id, it.side, "generate", e));
      } catch (const Error& io) {
        spdlog::error("cannot record error: {}", io.what());
      }
    }
  }
  summary.images_generated += generated;
  summary.images_skipped += skipped;
  spdlog::info("generate: {} images generated, {} already present", generated, skipped);
}

void stage_detect(const RunConfig& config, const RunPaths& paths, const Manifest& m, bool force,
                  PipelineSummary& summary) {
  if (!fs::exists(paths.root / "images")) {
    throw Error(Errc::missing_stage_input, "no images directory; run the generate stage first");
  }
  auto detector = make_detector(config.detector);
  const auto items = work_items(config, m);
  int detected = 0, skipped = 0;
  const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.concurrency) \
    reduction(+ : detected, skipped)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& it = items[static_cast<std::size_t>(i)];
    const auto& model = config.generators[it.model].name;
    const TestCase& tc = m.cases[it.tc];
    const auto out_path = paths.detection(model, tc.case_id, it.side);
    const auto ref_path = paths.image_ref(model, tc.case_id, it.side);
    if (!force && detection_current(out_path, ref_path)) {
      ++skipped;
      continue;
    }
    if (!fs::exists(ref_path)) continue;  // generation failed or never ran
    const auto err_path = paths.detection_error(model, tc.case_id, it.side);
    try {
      const ImageRef ref = read_json(ref_path).get<ImageRef>();
      DetectionResult det =
          detect_objects(*detector, ref, config.detector.score_threshold, paths.root);
      write_json(out_path, det);
      remove_if_exists(err_path);
      spdlog::info("detect {} {} {}: {} objects, {} text regions", model, tc.case_id,
                   to_string(it.side), det.detections.size(), det.ocr_regions.size());
      ++detected;
    } catch (const Error& e) {
      spdlog::warn("detect {} {} {}: {}", model, tc.case_id, to_string(it.side), e.what());
      try {
        write_json(err_path, error_record(model, tc.case_id, it.side, "detect", e));
      } catch (const Error& io) {
        spdlog::error("cannot record error: {}", io.what());
      }
    }
  }
  summary.detections_run += detected;
  summary.detections_skipped += skipped;
  spdlog::info("detect: {} images processed, {} already present", detected, skipped);
}

// Loads one side's detections, or explains why it cannot.
std::optional<DetectionResult> load_side(const RunPaths& paths, const std::string& model,
                                         const TestCase& tc, Side side, std::string& reason) {
  const auto det_path = paths.detection(model, tc.case_id, side);
  if (!fs::exists(det_path)) {
    for (const auto& err : {paths.image_error(model, tc.case_id, side),
                            paths.detection_error(model, tc.case_id, side)}) {
      if (fs::exists(err)) {
        const json e = read_json(err);
        reason = e.value("stage", std::string("?")) + " failed for side " +
                 std::string(to_string(side)) + ": " + e.value("code", std::string("?")) + ": " +
                 e.value("message", std::string{});
        return std::nullopt;
      }
    }
    reason = "no detections for side " + std::string(to_string(side));
    return std::nullopt;
  }
  DetectionResult det;
  try {
    det = read_json(det_path).get<DetectionResult>();
  } catch (const std::exception& e) {
    reason = std::string("unreadable detections: ") + e.what();
    return std::nullopt;
  }
  if (det.image.case_id != tc.case_id || det.image.side != side) {
    reason = "detections for side " + std::string(to_string(side)) + " belong to another image";
    return std::nullopt;
  }
  const auto ref_path = paths.image_ref(model, tc.case_id, side);
  if (fs::exists(ref_path)) {
    const auto ref = read_json(ref_path).get<ImageRef>();
    if (ref.sha256 != det.image.sha256) {
      reason = "image digest for side " + std::string(to_string(side)) +
               " changed after detection; rerun detect";
      return std::nullopt;
    }
  }
  return det;
}

bool stage_compare(const RunConfig& config, const RunPaths& paths, const Manifest& m, bool force,
                   PipelineSummary& summary) {
  if (!fs::exists(paths.root / "detections") && !fs::exists(paths.root / "images")) {
    throw Error(Errc::missing_stage_input, "no detections; run the detect stage first");
  }
  struct Slot {
    std::string model;
    const TestCase* tc;
    std::optional<DetectionResult> a, b;
    std::string reason;
  };
  std::vector<Slot> slots;
  for (const auto& g : config.generators) {
    for (const auto& tc : m.cases) {
      Slot s{g.name, &tc, {}, {}, {}};
      std::string ra, rb;
      s.a = load_side(paths, g.name, tc, Side::a, ra);
      s.b = load_side(paths, g.name, tc, Side::b, rb);
      s.reason = !ra.empty() ? ra : rb;
      slots.push_back(std::move(s));
    }
  }
  std::vector<PairInput> inputs;
  for (const auto& s : slots) {
    if (s.a && s.b) inputs.push_back({s.tc, &*s.a, &*s.b});
  }
  const auto verdicts = judge_batch(inputs, config.comparator, config.classifier);

  std::vector<VerdictRecord> records;
  std::size_t k = 0;
  for (const auto& s : slots) {
    if (s.a && s.b) {
      records.push_back(make_record(s.model, verdicts[k++]));
    } else {
      records.push_back(make_errored(s.model, s.tc->case_id, s.reason));
    }
  }
  std::string text;
  for (const auto& r : records) text += dump_line(json(r)) + "\n";

  for (const auto& r : records) {
    ++summary.judged;
    if (r.status == CaseStatus::misaligned) ++summary.misaligned;
    if (r.status == CaseStatus::errored) ++summary.errored;
  }

  const bool unchanged = fs::exists(paths.verdicts()) && fs::exists(paths.counterexamples()) &&
                         read_file(paths.verdicts()) == text;
  if (unchanged && !force) {
    spdlog::info("compare: verdicts unchanged");
    return false;
  }
  write_file(paths.verdicts(), text);

  std::error_code ec;
  fs::remove_all(paths.counterexamples(), ec);
  fs::create_directories(paths.counterexamples(), ec);
  if (ec) throw Error(Errc::io, "cannot create " + paths.counterexamples().string());
  k = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& s = slots[i];
    if (records[i].status != CaseStatus::misaligned) continue;
    CounterexampleInputs in;
    in.tc = s.tc;
    in.record = &records[i];
    in.det_a = &*s.a;
    in.det_b = &*s.b;
    in.image_a = paths.root / s.a->image.path;
    in.image_b = paths.root / s.b->image.path;
    log_counterexample(paths.counterexamples(), in);
  }
  spdlog::info("compare: {} judged, {} misaligned, {} errored", summary.judged,
               summary.misaligned, summary.errored);
  return true;
}

fs::path report_path(const RunPaths& paths, ReportFormat f) {
  return paths.root / ("report." + std::string(to_string(f)));
}

bool stage_report(const RunConfig& config, const RunPaths& paths, const Manifest& m,
                  bool compare_ran, bool force) {
  if (!fs::exists(paths.verdicts())) {
    throw Error(Errc::missing_stage_input, "verdicts.jsonl is missing; run the compare stage");
  }
  bool missing = false;
  for (auto f : config.formats) missing = missing || !fs::exists(report_path(paths, f));
  if (!compare_ran && !force && !missing) {
    spdlog::info("report: up to date");
    return false;
  }
  const auto records = read_verdicts(paths.verdicts());
  const Aggregate agg = aggregate(records, m);
  for (auto f : config.formats) emit_report(agg, f, paths.root);
  spdlog::info("report: overall misalignment {}%", format_rate(agg.table.overall.rate()));
  return true;
}

}  // namespace

PipelineSummary run_pipeline(const RunConfig& config, const PipelineOptions& options) {
  RunPaths paths{options.run_dir.value_or(config.run_dir())};
  std::error_code ec;
  fs::create_directories(paths.root, ec);
  if (ec) throw Error(Errc::io, "cannot create run directory " + paths.root.string());
  LogScope log(config, paths, options.file_log);

  const auto& st = options.stages;
  PipelineSummary summary;
  const Manifest manifest = st.contains(Stage::gen_suite)
                                ? stage_gen_suite(config, paths, options.force)
                                : load_manifest(paths);
  summary.cases = static_cast<int>(manifest.cases.size());

  if (st.contains(Stage::generate)) stage_generate(config, paths, manifest, options.force, summary);
  if (st.contains(Stage::detect)) stage_detect(config, paths, manifest, options.force, summary);
  if (st.contains(Stage::compare)) {
    summary.compare_ran = stage_compare(config, paths, manifest, options.force, summary);
  } else if (fs::exists(paths.verdicts())) {
    for (const auto& r : read_verdicts(paths.verdicts())) {
      if (r.status == CaseStatus::errored) ++summary.errored;
    }
  }
  if (st.contains(Stage::report)) {
    summary.report_ran = stage_report(config, paths, manifest, summary.compare_ran, options.force);
  }
  summary.exit_code = summary.errored > 0 ? 2 : 0;
  return summary;
}

}  // namespace metalogic
