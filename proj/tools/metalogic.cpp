#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "metalogic/config.hpp"
#include "metalogic/errors.hpp"
#include "metalogic/logic.hpp"
#include "metalogic/pipeline.hpp"
#include "metalogic/serialization.hpp"

using namespace metalogic;

namespace {

struct Common {
  std::string config;
  std::string out;
  bool force = false;
  std::string stages = "all";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool with_stages) {
  cmd->add_option("--config", c.config, "Run configuration (JSON)")->required();
  cmd->add_option("--out", c.out, "Run directory (gen-suite: manifest file)");
  cmd->add_flag("--force", c.force, "Redo work even when outputs exist");
  cmd->add_option("--seed", c.seed, "Override suite.seed");
  if (with_stages) {
    cmd->add_option("--stages", c.stages,
                    "Comma-separated subset of gen-suite,generate,detect,compare,report");
  }
}

RunConfig load(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (c.seed) cfg.suite.seed = *c.seed;
  return cfg;
}

void print_summary(const PipelineSummary& s) {
  std::printf("cases: %d\n", s.cases);
  if (s.images_generated || s.images_skipped) {
    std::printf("images: %d generated, %d skipped\n", s.images_generated, s.images_skipped);
  }
  if (s.detections_run || s.detections_skipped) {
    std::printf("detections: %d run, %d skipped\n", s.detections_run, s.detections_skipped);
  }
  if (s.judged) {
    std::printf("verdicts: %d judged, %d misaligned, %d errored%s\n", s.judged, s.misaligned,
                s.errored, s.compare_ran ? "" : " (unchanged)");
  }
  if (s.report_ran) std::printf("report: written\n");
}

int run_stages(const Common& c, std::set<Stage> stages) {
  const RunConfig cfg = load(c);
  PipelineOptions opt;
  opt.stages = std::move(stages);
  opt.force = c.force;
  if (!c.out.empty()) opt.run_dir = c.out;
  const auto summary = run_pipeline(cfg, opt);
  print_summary(summary);
  return summary.exit_code;
}

int gen_suite(const Common& c) {
  if (c.out.empty()) return run_stages(c, {Stage::gen_suite});
  const RunConfig cfg = load(c);
  const auto cases = generate_suite(cfg.suite);
  std::ofstream out(c.out, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + c.out);
  write_manifest(out, cfg.suite, cases);
  std::printf("cases: %zu\n", cases.size());
  return 0;
}

int templates(const std::string& format) {
  json arr = json::array();
  for (const auto& tp : template_registry()) {
    json j{{"id", tp.id},
           {"law", to_string(tp.law)},
           {"modifier", to_string(tp.modifier)},
           {"slots", tp.slots},
           {"skeleton_a", tp.skeleton_a},
           {"skeleton_b", tp.skeleton_b},
           {"formula_a", to_string(tp.formula_a)},
           {"formula_b", to_string(tp.formula_b)}};
    if (tp.numbered_entity) j["numbered_entity"] = *tp.numbered_entity;
    arr.push_back(std::move(j));
  }
  if (format == "json") {
    std::cout << arr.dump(2) << "\n";
  } else {
    for (const auto& j : arr) {
      std::cout << j["id"].get<std::string>() << "\n  A: " << j["skeleton_a"].get<std::string>()
                << "\n  B: " << j["skeleton_b"].get<std::string>() << "\n";
    }
  }
  return 0;
}

int eqcheck(const std::string& a, const std::string& b) {
  const Formula fa = parse_formula(a);
  const Formula fb = parse_formula(b);
  std::cout << "A: " << to_string(fa) << "\nB: " << to_string(fb) << "\n";
  const bool eq = equivalent(fa, fb);
  std::cout << (eq ? "equivalent" : "not equivalent") << "\n";
  return eq ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metamorphic logic testing for text-to-image models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Common common;
  struct Cmd {
    const char* name;
    const char* help;
    std::optional<Stage> stage;
  };
  const Cmd stage_cmds[] = {
      {"gen-suite", "Write the suite manifest", Stage::gen_suite},
      {"generate", "Generate images for every case", Stage::generate},
      {"detect", "Run object detection on generated images", Stage::detect},
      {"compare", "Judge every image pair", Stage::compare},
      {"report", "Aggregate verdicts into reports", Stage::report},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : stage_cmds) {
    subs[c.name] = app.add_subcommand(c.name, c.help);
    add_common(subs[c.name], common, false);
  }
  auto* run = app.add_subcommand("run", "Run the pipeline stages in order");
  add_common(run, common, true);

  std::string format = "json";
  auto* tmpl = app.add_subcommand("templates", "List the template registry");
  tmpl->add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}));

  std::string fa, fb;
  auto* eq = app.add_subcommand("eqcheck", "Truth-table equivalence of two formulas");
  eq->add_option("--formula-a", fa, "Formula in the DSL, e.g. \"cat@left & !dog\"")->required();
  eq->add_option("--formula-b", fb, "Second formula")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (tmpl->parsed()) return templates(format);
    if (eq->parsed()) return eqcheck(fa, fb);
    if (subs["gen-suite"]->parsed()) return gen_suite(common);
    if (run->parsed()) return run_stages(common, parse_stages(common.stages));
    for (const auto& c : stage_cmds) {
      if (subs[c.name]->parsed()) return run_stages(common, {*c.stage});
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error at byte " << e.offset() << ": " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}
