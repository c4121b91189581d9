#include "metalogic/suite.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "metalogic/errors.hpp"
#include "metalogic/rng.hpp"
#include "metalogic/serialization.hpp"

namespace metalogic {

std::vector<std::string> SuiteConfig::violations() const {
  std::vector<std::string> out;
  auto check_labels = [&](const std::vector<std::string>& labels, const std::string& field) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto& l = labels[i];
      const std::string where = field + "/" + std::to_string(i);
      try {
        Atom::make(l);
      } catch (const Error&) {
        out.push_back(where + ": '" + l + "' is not a lowercase entity label");
      }
      if (!seen.insert(l).second) out.push_back(where + ": duplicate label '" + l + "'");
    }
  };
  check_labels(vocabulary, "vocabulary");
  check_labels(numbering_entities, "numbering_entities");
  if (vocabulary.size() < 2) out.push_back("vocabulary: needs at least two labels");
  for (std::size_t i = 0; i < laws.size(); ++i) {
    if (!law_from_string(laws[i])) {
      out.push_back("laws/" + std::to_string(i) + ": unknown law '" + laws[i] + "'");
    }
  }
  for (std::size_t i = 0; i < modifiers.size(); ++i) {
    if (modifiers[i] != "n" && !modifier_from_string(modifiers[i])) {
      out.push_back("modifiers/" + std::to_string(i) + ": unknown modifier '" + modifiers[i] +
                    "'");
    }
  }
  if (count_min < kMinCount || count_max > kMaxCount || count_min > count_max) {
    out.push_back("counts: range [" + std::to_string(count_min) + "," +
                  std::to_string(count_max) + "] must lie within [1,10]");
  }
  if (max_cases_per_category && *max_cases_per_category == 0) {
    out.push_back("max_cases_per_category: must be positive");
  }
  return out;
}

std::vector<std::vector<std::string>> entity_combinations(std::span<const std::string> vocab,
                                                          int k) {
  if (k < 1 || static_cast<std::size_t>(k) > vocab.size()) {
    throw Error(Errc::arity_mismatch, "cannot draw " + std::to_string(k) +
                                          "-tuples from a vocabulary of " +
                                          std::to_string(vocab.size()));
  }
  std::vector<std::vector<std::string>> out;
  std::vector<std::size_t> idx;
  std::vector<bool> used(vocab.size(), false);
  // Depth-first over indices in ascending order yields lexicographic tuples.
  auto rec = [&](auto&& self) -> void {
    if (idx.size() == static_cast<std::size_t>(k)) {
      std::vector<std::string> t;
      t.reserve(idx.size());
      for (auto i : idx) t.push_back(vocab[i]);
      out.push_back(std::move(t));
      return;
    }
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      idx.push_back(i);
      self(self);
      idx.pop_back();
      used[i] = false;
    }
  };
  rec(rec);
  return out;
}

std::string make_case_id(std::string_view template_id, std::span<const std::string> entities) {
  std::string id(template_id);
  id += "__";
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (i) id += '-';
    for (char c : entities[i]) id += c == ' ' ? '_' : c;
  }
  return id;
}

namespace {

bool passes(const std::vector<std::string>& filter, std::string_view value) {
  return filter.empty() || std::find(filter.begin(), filter.end(), value) != filter.end();
}

bool modifier_passes(const std::vector<std::string>& filter, Modifier m) {
  if (filter.empty()) return true;
  if (modifier_count(m) && std::find(filter.begin(), filter.end(), "n") != filter.end()) {
    return true;
  }
  return passes(filter, to_string(m));
}

TestCase make_case(const TemplatePair& tp, const std::vector<std::string>& entities) {
  TestCase tc;
  tc.template_id = tp.id;
  tc.case_id = make_case_id(tp.id, entities);
  tc.law = tp.law;
  tc.modifier = tp.modifier;
  tc.entities = entities;
  tc.count = modifier_count(tp.modifier);
  auto prompts = render(tp, entities, tc.count);
  tc.prompt_a = std::move(prompts.a);
  tc.prompt_b = std::move(prompts.b);
  tc.scene = expected_semantics(tp, entities, tc.count);
  tc.numbered_entity = tp.numbered_entity;
  return tc;
}

std::string partner_for(const std::vector<std::string>& vocab, const std::string& counted) {
  auto it = std::find(vocab.begin(), vocab.end(), counted);
  std::size_t start = it == vocab.end() ? 0 : static_cast<std::size_t>(it - vocab.begin()) + 1;
  for (std::size_t step = 0; step < vocab.size(); ++step) {
    const auto& candidate = vocab[(start + step) % vocab.size()];
    if (candidate != counted) return candidate;
  }
  throw Error(Errc::invalid_config, "no numbering partner for '" + counted + "'");
}

}  // namespace

std::vector<TestCase> generate_suite(const SuiteConfig& config) {
  if (auto v = config.violations(); !v.empty()) throw ConfigError(std::move(v));

  std::vector<TestCase> out;
  std::map<int, std::vector<std::vector<std::string>>> tuples;
  for (const TemplatePair& tp : template_registry()) {
    if (tp.law == Law::numbering) continue;
    if (!passes(config.laws, to_string(tp.law)) || !modifier_passes(config.modifiers, tp.modifier)) {
      continue;
    }
    if (static_cast<std::size_t>(tp.slots) > config.vocabulary.size()) continue;
    auto& combos = tuples[tp.slots];
    if (combos.empty()) combos = entity_combinations(config.vocabulary, tp.slots);

    std::vector<std::size_t> order(combos.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (config.max_cases_per_category && *config.max_cases_per_category < order.size()) {
      Rng rng(derive_seed(config.seed, tp.id));
      rng.shuffle(order);
      order.resize(*config.max_cases_per_category);
      std::sort(order.begin(), order.end());
    }
    for (auto i : order) out.push_back(make_case(tp, combos[i]));
  }

  if (passes(config.laws, to_string(Law::numbering))) {
    for (int n = config.count_min; n <= config.count_max; ++n) {
      if (!modifier_passes(config.modifiers, number_modifier(n))) continue;
      for (const auto& counted : config.numbering_entities) {
        const TemplatePair tp = numbering_category(counted, n);
        std::vector<std::string> entities = {partner_for(config.vocabulary, counted), counted};
        out.push_back(make_case(tp, entities));
      }
    }
  }

  if (out.empty()) throw Error(Errc::empty_suite, "suite filters eliminated every category");
  return out;
}

void Manifest::reindex() {
  index.clear();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!index.emplace(cases[i].case_id, i).second) {
      throw Error(Errc::schema, "duplicate case_id '" + cases[i].case_id + "' in manifest");
    }
  }
}

const TestCase& Manifest::find(std::string_view case_id) const {
  auto it = index.find(case_id);
  if (it == index.end()) {
    throw Error(Errc::unknown_case, "case '" + std::string(case_id) + "' is not in the manifest");
  }
  return cases[it->second];
}

void write_manifest(std::ostream& out, const SuiteConfig& config,
                    std::span<const TestCase> cases) {
  json header = {{"record", "header"},
                 {"schema_version", kManifestSchemaVersion},
                 {"tool", kToolName},
                 {"version", kToolVersion},
                 {"prng", kPrngAlgorithm},
                 {"config", config},
                 {"case_count", cases.size()}};
  out << dump_line(header) << '\n';
  for (const auto& c : cases) {
    json rec = c;
    rec["record"] = "case";
    out << dump_line(rec) << '\n';
  }
}

Manifest read_manifest(std::istream& in) {
  Manifest m;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::schema, "manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto kind = j.value("record", std::string{});
    if (kind == "header") {
      if (j.value("schema_version", 0) != kManifestSchemaVersion) {
        throw Error(Errc::schema, "unsupported manifest schema_version");
      }
      m.config = j.at("config").get<SuiteConfig>();
      have_header = true;
    } else if (kind == "case") {
      m.cases.push_back(j.get<TestCase>());
    } else {
      throw Error(Errc::schema, "manifest line " + std::to_string(lineno) + ": unknown record");
    }
  }
  if (!have_header) throw Error(Errc::schema, "manifest has no header record");
  m.reindex();
  return m;
}

}  // namespace metalogic
