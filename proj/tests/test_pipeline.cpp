#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "metalogic/errors.hpp"
#include "metalogic/image.hpp"
#include "metalogic/pipeline.hpp"
#include "support.hpp"

using namespace metalogic;
namespace fs = std::filesystem;

namespace {

json small_config(const fs::path& out) {
  json j = json::parse(R"({
    "run_id": "t",
    "suite": {"laws": ["commutative", "demorgan"], "seed": 3},
    "backends": {
      "generation": [{"name": "mock", "kind": "mock"}],
      "detection": {"kind": "mock"}
    },
    "concurrency": 2
  })");
  j["output_dir"] = out.string();
  return j;
}

PipelineOptions quiet(std::set<Stage> stages = all_stages()) {
  PipelineOptions o;
  o.stages = std::move(stages);
  o.file_log = false;
  return o;
}

std::vector<std::string> listing(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Stages, Parse) {
  EXPECT_EQ(parse_stages("all"), all_stages());
  EXPECT_EQ(parse_stages("compare,report"), (std::set<Stage>{Stage::compare, Stage::report}));
  EXPECT_EQ(stage_from_string("gen-suite"), Stage::gen_suite);
  EXPECT_THROW(parse_stages("compare,bogus"), ConfigError);
}

TEST(Pipeline, GenSuiteOnlyWritesSuite) {
  const auto dir = mltest::temp_dir("p_gensuite");
  const RunConfig cfg = parse_config(small_config(dir));
  const auto s = run_pipeline(cfg, quiet({Stage::gen_suite}));
  EXPECT_GT(s.cases, 0);
  EXPECT_EQ(listing(cfg.run_dir()), std::vector<std::string>{"suite.jsonl"});
}

TEST(Pipeline, NullPipelineIsAlignedEverywhere) {
  const auto dir = mltest::temp_dir("p_null");
  const RunConfig cfg = parse_config(small_config(dir));
  const auto s = run_pipeline(cfg, quiet());
  EXPECT_EQ(s.exit_code, 0);
  EXPECT_EQ(s.misaligned, 0);
  EXPECT_EQ(s.errored, 0);
  EXPECT_EQ(s.judged, s.cases);
  EXPECT_EQ(s.images_generated, 2 * s.cases);
  const json rep = json::parse(read_file(cfg.run_dir() / "report.json"));
  for (const auto& row : rep["rows"]) EXPECT_EQ(row["rate_percent"], "0.0") << row.dump();
  EXPECT_TRUE(fs::exists(cfg.run_dir() / "report.csv"));
  EXPECT_TRUE(fs::exists(cfg.run_dir() / "report.html"));
  EXPECT_FALSE(fs::exists(cfg.run_dir() / "counterexamples") &&
               !fs::is_empty(cfg.run_dir() / "counterexamples"));
}

TEST(Pipeline, ResumeAndIdempotence) {
  const auto dir = mltest::temp_dir("p_resume");
  const RunConfig cfg = parse_config(small_config(dir));
  const RunPaths paths{cfg.run_dir()};
  run_pipeline(cfg, quiet());
  const std::string verdicts = read_file(paths.verdicts());
  const std::string report = read_file(cfg.run_dir() / "report.json");
  const std::string suite = read_file(paths.suite());

  const auto again = run_pipeline(cfg, quiet());
  EXPECT_EQ(again.images_generated, 0);
  EXPECT_EQ(again.detections_run, 0);
  EXPECT_FALSE(again.compare_ran);
  EXPECT_FALSE(again.report_ran);
  EXPECT_EQ(read_file(paths.verdicts()), verdicts);
  EXPECT_EQ(read_file(paths.suite()), suite);

  fs::remove(paths.verdicts());
  const auto resumed = run_pipeline(cfg, quiet());
  EXPECT_EQ(resumed.images_generated, 0);
  EXPECT_EQ(resumed.detections_run, 0);
  EXPECT_TRUE(resumed.compare_ran);
  EXPECT_TRUE(resumed.report_ran);
  EXPECT_EQ(read_file(paths.verdicts()), verdicts);
  EXPECT_EQ(read_file(cfg.run_dir() / "report.json"), report);

  // One lost image: only that image and its detection are redone.
  const std::string tc_id = read_verdicts(paths.verdicts()).front().verdict.case_id;
  fs::remove(paths.image("mock", tc_id, Side::a));
  const auto partial = run_pipeline(cfg, quiet());
  EXPECT_EQ(partial.images_generated, 1);
  // Mock output is deterministic, so the stored detection still matches the digest.
  EXPECT_EQ(partial.detections_run, 0);
  EXPECT_EQ(read_file(paths.verdicts()), verdicts);

  const auto forced = run_pipeline(cfg, [] {
    auto o = quiet();
    o.force = true;
    return o;
  }());
  EXPECT_EQ(forced.images_generated, 2 * forced.cases);
  EXPECT_EQ(read_file(paths.verdicts()), verdicts);
}

TEST(Pipeline, MissingStageInput) {
  const auto dir = mltest::temp_dir("p_missing");
  const RunConfig cfg = parse_config(small_config(dir));
  for (auto st : {Stage::generate, Stage::detect, Stage::compare, Stage::report}) {
    try {
      run_pipeline(cfg, quiet({st}));
      FAIL() << to_string(st);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::missing_stage_input) << to_string(st);
    }
  }
}

TEST(Pipeline, DetectorSwapReusesImages) {
  const auto dir = mltest::temp_dir("p_swap");
  RunConfig cfg = parse_config(small_config(dir));
  run_pipeline(cfg, quiet());
  const std::string png_before = read_file(RunPaths{cfg.run_dir()}.image(
      "mock", read_verdicts(RunPaths{cfg.run_dir()}.verdicts()).front().verdict.case_id, Side::b));
  cfg.detector.score_threshold = 0.95;  // mock scores sit below this
  const auto s = run_pipeline(cfg, quiet({Stage::detect, Stage::compare, Stage::report}));
  EXPECT_EQ(s.images_generated, 0);
  auto o = quiet({Stage::detect, Stage::compare, Stage::report});
  o.force = true;
  const auto f = run_pipeline(cfg, o);
  EXPECT_EQ(f.images_generated, 0);
  EXPECT_EQ(f.detections_run, 2 * f.cases);
  EXPECT_TRUE(f.compare_ran);
  EXPECT_EQ(read_file(RunPaths{cfg.run_dir()}.image(
                "mock",
                read_verdicts(RunPaths{cfg.run_dir()}.verdicts()).front().verdict.case_id,
                Side::b)),
            png_before);
}

TEST(Pipeline, FailingBackendErrorsCasesAndExitsTwo) {
  const auto dir = mltest::temp_dir("p_fail");
  json j = small_config(dir);
  j["suite"]["laws"] = {"commutative"};
  j["backends"]["generation"] = json::parse(R"([{
    "name": "remote", "kind": "sd", "endpoint": "http://127.0.0.1:1/gen",
    "timeout_s": 1, "retry": {"max_attempts": 1}
  }])");
  const RunConfig cfg = parse_config(j);
  const auto s = run_pipeline(cfg, quiet());
  EXPECT_EQ(s.exit_code, 2);
  EXPECT_EQ(s.errored, s.cases);
  const auto recs = read_verdicts(RunPaths{cfg.run_dir()}.verdicts());
  ASSERT_EQ(static_cast<int>(recs.size()), s.cases);
  EXPECT_EQ(recs[0].status, CaseStatus::errored);
  EXPECT_NE(recs[0].error.find("transport"), std::string::npos) << recs[0].error;
  EXPECT_TRUE(fs::exists(RunPaths{cfg.run_dir()}.image_error("remote", recs[0].verdict.case_id,
                                                             Side::a)));
  const json rep = json::parse(read_file(cfg.run_dir() / "report.json"));
  EXPECT_EQ(rep["rows"].back()["rate_percent"], "n/a");
}

TEST(Config, ViolationsUseJsonPointers) {
  json j = small_config("/tmp");
  j["concurrency"] = 0;
  j["suite"]["counts"] = {5, 2};
  j["backends"]["generation"][0]["failures"] = {{"p_omit", 1.5}};
  j["backends"]["detection"]["score_threshold"] = -1;
  j["bogus"] = true;
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    std::string all;
    for (const auto& v : e.violations()) all += v + "\n";
    for (const char* p : {"/concurrency", "/suite/counts", "/backends/generation/0/failures/p_omit",
                          "/backends/detection/score_threshold", "/bogus"}) {
      EXPECT_NE(all.find(p), std::string::npos) << p << "\n" << all;
    }
  }
  json no_gen = small_config("/tmp");
  no_gen["backends"]["generation"] = json::array();
  EXPECT_THROW(parse_config(no_gen), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  const fs::path src = METALOGIC_SOURCE_DIR;
  const RunConfig mock = load_config(src / "configs/mock.json");
  EXPECT_EQ(mock.generators.size(), 1u);
  const RunConfig api = load_config(src / "configs/api.json");
  EXPECT_EQ(api.generators.size(), 2u);
  EXPECT_EQ(api.generators[0].http.credential_env, "OPENAI_API_KEY");
  EXPECT_EQ(read_file(src / "configs/api.json").find("sk-"), std::string::npos);
}

TEST(Cli, EndToEndSmoke) {
  const auto dir = mltest::temp_dir("p_cli");
  {
    std::ofstream f(dir / "c.json");
    f << small_config(dir / "runs").dump(2);
  }
  const std::string cli = METALOGIC_CLI;
  const std::string cfg = (dir / "c.json").string();
  EXPECT_EQ(std::system((cli + " run --config " + cfg + " > " + (dir / "out.txt").string()).c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "runs/t/report.json"));
  EXPECT_EQ(std::system((cli + " gen-suite --config " + cfg + " --out " +
                         (dir / "m.jsonl").string() + " > /dev/null").c_str()),
            0);
  EXPECT_EQ(read_file(dir / "m.jsonl"), read_file(dir / "runs/t/suite.jsonl"));
  const int neq = std::system(
      (cli + " eqcheck --formula-a 'cat & dog' --formula-b 'cat | dog' > /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(neq), 3);
  const int eq = std::system(
      (cli + " eqcheck --formula-a '!(cat & dog)' --formula-b '!cat | !dog' > /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(eq), 0);
  const int bad = std::system((cli + " run --config /nonexistent.json 2> /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(bad), 1);
}
