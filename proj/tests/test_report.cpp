#include <gtest/gtest.h>

#include <fstream>

#include "metalogic/errors.hpp"
#include "metalogic/image.hpp"
#include "metalogic/report.hpp"
#include "metalogic/serialization.hpp"
#include "support.hpp"

using namespace metalogic;

namespace {

Manifest manifest_for(SuiteConfig c) {
  Manifest m;
  m.config = c;
  m.cases = generate_suite(c);
  m.reindex();
  return m;
}

// Integer-only percentage at one decimal, half up.
std::string oracle_rate(int mis, int judged) {
  if (judged == 0) return "n/a";
  const long long tenths = (2000LL * mis + judged) / (2LL * judged);
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

Verdict misaligned_verdict(const std::string& id, std::vector<ErrorCategory> cats) {
  Verdict v;
  v.case_id = id;
  v.aligned = false;
  v.categories = std::move(cats);
  v.uncategorized = v.categories.empty();
  return v;
}

std::vector<VerdictRecord> mixed_records(const Manifest& m, mltest::Gen& g,
                                         const std::vector<std::string>& models) {
  std::vector<VerdictRecord> out;
  for (const auto& model : models) {
    for (const auto& tc : m.cases) {
      const int r = g.range(0, 9);
      if (r == 0) {
        out.push_back(make_errored(model, tc.case_id, "api failure"));
      } else if (r < 5) {
        out.push_back(make_record(model, misaligned_verdict(tc.case_id, {ErrorCategory::entity_omission})));
      } else {
        Verdict v;
        v.case_id = tc.case_id;
        out.push_back(make_record(model, v));
      }
    }
  }
  return out;
}

}  // namespace

TEST(Aggregate, ConjunctionFixtureGives45Point8) {
  SuiteConfig c;
  c.modifiers = {"and"};
  const Manifest m = manifest_for(c);
  ASSERT_GE(m.cases.size(), 24u);
  std::vector<VerdictRecord> recs;
  for (int i = 0; i < 24; ++i) {
    Verdict v;
    v.case_id = m.cases[static_cast<std::size_t>(i)].case_id;
    if (i < 11) v = misaligned_verdict(v.case_id, {ErrorCategory::entity_omission});
    recs.push_back(make_record("flux", v));
  }
  const Aggregate agg = aggregate(recs, m);
  EXPECT_EQ(agg.table.overall.total, 24);
  EXPECT_EQ(agg.table.overall.misaligned, 11);
  EXPECT_EQ(format_rate(agg.table.by_modifier.at(Modifier::conj).rate()), "45.8");
  EXPECT_EQ(format_rate(agg.table.overall.rate()), oracle_rate(11, 24));
}

TEST(Aggregate, TrivialZeroAndErrors) {
  const Manifest m = manifest_for(SuiteConfig{});
  std::vector<VerdictRecord> recs;
  for (int i = 0; i < 4; ++i) {
    Verdict v;
    v.case_id = m.cases[static_cast<std::size_t>(i)].case_id;
    recs.push_back(make_record("m", v));
  }
  EXPECT_EQ(format_rate(aggregate(recs, m).table.overall.rate()), "0.0");

  auto dup = recs;
  dup.push_back(recs[0]);
  try {
    aggregate(dup, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::duplicate_verdict);
  }
  auto unknown = recs;
  unknown[1].verdict.case_id = "nope";
  try {
    aggregate(unknown, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_case);
  }
  // Same case for two models is fine.
  auto two = recs;
  two.push_back(recs[0]);
  two.back().model = "other";
  EXPECT_EQ(aggregate(two, m).table.overall.total, 5);

  RateCell all_err{3, 3, 0};
  EXPECT_FALSE(all_err.rate());
  EXPECT_EQ(format_rate(all_err.rate()), "n/a");
}

TEST(Aggregate, ConservationAndMarginals) {
  const Manifest m = manifest_for(SuiteConfig{});
  mltest::Gen g(4);
  const auto recs = mixed_records(m, g, {"flux", "dalle"});
  const Aggregate agg = aggregate(recs, m);
  RateCell sum;
  for (const auto& [k, c] : agg.table.rows) {
    sum += c;
    EXPECT_EQ(c.misaligned + c.aligned() + c.errored, c.total);
    if (auto r = c.rate()) {
      EXPECT_GE(*r, 0.0);
      EXPECT_LE(*r, 1.0);
    }
  }
  EXPECT_EQ(sum, agg.table.overall);
  EXPECT_EQ(agg.table.overall.total, static_cast<int>(2 * m.cases.size()));
  for (const auto* marg : {&agg.table.by_law}) {
    RateCell s;
    for (const auto& [k, c] : *marg) s += c;
    EXPECT_EQ(s, agg.table.overall);
  }
  RateCell s2;
  for (const auto& [k, c] : agg.table.by_modifier) s2 += c;
  EXPECT_EQ(s2, agg.table.overall);
  RateCell s3;
  for (const auto& [k, c] : agg.table.by_model) s3 += c;
  EXPECT_EQ(s3, agg.table.overall);

  // Numbering curves: counts strictly increasing 1..10 per (model, entity).
  EXPECT_EQ(agg.curves.size(), 8u);
  for (const auto& [key, pts] : agg.curves) {
    int prev = 0;
    for (const auto& [n, c] : pts) {
      EXPECT_GT(n, prev);
      prev = n;
    }
    EXPECT_EQ(pts.size(), 10u);
  }
}

TEST(Report, CsvRecomputationMatchesJsonExactly) {
  const Manifest m = manifest_for(SuiteConfig{});
  mltest::Gen g(12);
  const Aggregate agg = aggregate(mixed_records(m, g, {"flux"}), m);
  const auto rows = parse_report_csv(render_csv(agg));
  const json j = json::parse(render_json(agg));
  ASSERT_EQ(rows.size(), j["rows"].size());
  std::size_t cells = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& jr = j["rows"][i];
    EXPECT_EQ(r.scope, jr["scope"]);
    EXPECT_EQ(r.total, jr["total"]);
    EXPECT_EQ(r.misaligned, jr["misaligned"]);
    EXPECT_EQ(r.errored, jr["errored"]);
    EXPECT_EQ(oracle_rate(r.misaligned, r.total - r.errored), r.rate_percent);
    EXPECT_EQ(r.rate_percent, jr["rate_percent"]);
    cells += r.scope == "cell";
  }
  EXPECT_EQ(cells, agg.table.rows.size());
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
}

TEST(Report, LogicSuiteRowCount) {
  SuiteConfig c;
  c.laws = {"commutative", "associative", "distributive", "complement", "demorgan"};
  const Manifest m = manifest_for(c);
  std::vector<VerdictRecord> recs;
  for (const auto& tc : m.cases) {
    Verdict v;
    v.case_id = tc.case_id;
    recs.push_back(make_record("m", v));
  }
  const auto rows = parse_report_csv(render_csv(aggregate(recs, m)));
  int cells = 0;
  for (const auto& r : rows) cells += r.scope == "cell";
  EXPECT_EQ(cells, 20);
  // marginals: 1 model + 5 laws + 4 modifiers + overall
  EXPECT_EQ(rows.size(), 20u + 1 + 5 + 4 + 1);
}

TEST(Report, DeterministicAndSelfContained) {
  const Manifest m = manifest_for(SuiteConfig{});
  mltest::Gen g1(3), g2(3);
  const auto a = aggregate(mixed_records(m, g1, {"x"}), m);
  const auto b = aggregate(mixed_records(m, g2, {"x"}), m);
  EXPECT_EQ(render_json(a), render_json(b));
  const std::string html = render_html(a);
  EXPECT_EQ(html.find("http://"), std::string::npos);
  EXPECT_EQ(html.find("https://"), std::string::npos);
  EXPECT_NE(html.find("<table>"), std::string::npos);

  const auto dir = mltest::temp_dir("emit");
  for (auto f : {ReportFormat::json, ReportFormat::csv, ReportFormat::html}) {
    EXPECT_TRUE(std::filesystem::exists(emit_report(a, f, dir)));
  }
  EXPECT_EQ(read_file(dir / "report.json"), render_json(a));
  EXPECT_THROW(emit_report(a, ReportFormat::json, "/proc/metalogic-denied"), Error);
}

TEST(Report, VerdictRecordsRoundTrip) {
  Verdict v = misaligned_verdict("c1", {ErrorCategory::x_misposition});
  v.presence_diff = {{"cat", {1, 2}}};
  v.position_diff = {{"cat", 0, "dog", 0, Order::before, Order::after}};
  const auto rec = make_record("m", v);
  EXPECT_EQ(json(rec).get<VerdictRecord>(), rec);
  const auto err = make_errored("m", "c2", "boom");
  const json je = err;
  EXPECT_EQ(je["status"], "errored");
  EXPECT_EQ(je.get<VerdictRecord>(), err);
  json bad = je;
  bad["schema_version"] = 99;
  EXPECT_THROW(bad.get<VerdictRecord>(), Error);
}

TEST(Counterexample, NamingAndContents) {
  const Manifest m = manifest_for(SuiteConfig{});
  const TestCase& tc = m.cases[0];
  const auto dir = mltest::temp_dir("cex");

  Verdict ok;
  ok.case_id = tc.case_id;
  const auto aligned = make_record("m", ok);
  CounterexampleInputs in{&tc, &aligned, nullptr, nullptr, {}, {}};
  EXPECT_FALSE(log_counterexample(dir, in));
  EXPECT_TRUE(std::filesystem::is_empty(dir));

  const auto rec = make_record("m", misaligned_verdict(tc.case_id, {ErrorCategory::entity_omission}));
  EXPECT_EQ(counterexample_dirname(rec.verdict), tc.case_id + "__entity_omission");
  EXPECT_EQ(counterexample_dirname(misaligned_verdict("c", {})), "c__uncategorized");
  EXPECT_EQ(counterexample_dirname(misaligned_verdict(
                "c", {ErrorCategory::entity_omission, ErrorCategory::entity_duplication})),
            "c__entity_omission_entity_duplication");

  RgbImage white(64, 48, {255, 255, 255});
  write_file(dir / "src_a.png", encode_png(white));
  DetectionResult da;
  da.width = 64;
  da.height = 48;
  da.detections = {mltest::det("cat", 10, 10, 30, 20)};
  DetectionResult db = da;
  db.detections.clear();
  in = {&tc, &rec, &da, &db, dir / "src_a.png", dir / "missing_b.png"};
  const auto out = log_counterexample(dir / "archive", in);
  ASSERT_TRUE(out);
  EXPECT_EQ(out->filename().string(), tc.case_id + "__entity_omission");
  for (const char* f : {"prompts.json", "verdict.json", "a.png", "detections_a.json",
                        "detections_b.json", "overlay_a.png", "overlay_b.png"}) {
    EXPECT_TRUE(std::filesystem::exists(*out / f)) << f;
  }
  const json prompts = json::parse(read_file(*out / "prompts.json"));
  EXPECT_EQ(prompts["prompt_a"], tc.prompt_a);
  // Centroid marker at ((x1+x2)/2, (y1+y2)/2) = (20, 15).
  const RgbImage overlay = decode_png(read_file(*out / "overlay_a.png"));
  const Rgb c = overlay.at(20, 15);
  EXPECT_EQ(c.r + c.g + c.b, 0);
  EXPECT_EQ(overlay.at(50, 40).r, 255);
  // Missing image: blank canvas sized from the detections.
  const RgbImage blank = decode_png(read_file(*out / "overlay_b.png"));
  EXPECT_EQ(blank.width(), 64);
}
