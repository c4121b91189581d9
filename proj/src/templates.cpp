#include "metalogic/templates.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "metalogic/errors.hpp"
#include "metalogic/labels.hpp"

namespace metalogic {

std::string_view to_string(Law law) {
  switch (law) {
    case Law::commutative: return "commutative";
    case Law::associative: return "associative";
    case Law::distributive: return "distributive";
    case Law::complement: return "complement";
    case Law::demorgan: return "demorgan";
    case Law::numbering: return "numbering";
  }
  return "?";
}

std::string_view to_string(Modifier m) {
  static constexpr std::array<std::string_view, 14> names = {
      "and", "or", "x", "y", "n1", "n2", "n3", "n4", "n5", "n6", "n7", "n8", "n9", "n10"};
  return names[static_cast<std::size_t>(m)];
}

std::optional<Law> law_from_string(std::string_view s) {
  for (auto l : {Law::commutative, Law::associative, Law::distributive, Law::complement,
                 Law::demorgan, Law::numbering}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

std::optional<Modifier> modifier_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Modifier::n10); ++i) {
    auto m = static_cast<Modifier>(i);
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

Modifier number_modifier(int count) {
  if (count < kMinCount || count > kMaxCount) {
    throw Error(Errc::count_out_of_range, "count " + std::to_string(count) + " outside [1,10]");
  }
  return static_cast<Modifier>(static_cast<int>(Modifier::n1) + count - 1);
}

std::optional<int> modifier_count(Modifier m) {
  if (static_cast<int>(m) < static_cast<int>(Modifier::n1)) return std::nullopt;
  return static_cast<int>(m) - static_cast<int>(Modifier::n1) + 1;
}

std::string_view to_string(Axis a) { return a == Axis::x ? "x" : "y"; }

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::left_of: return "left_of";
    case Relation::right_of: return "right_of";
    case Relation::above: return "above";
    case Relation::below: return "below";
  }
  return "?";
}

std::optional<Axis> axis_from_string(std::string_view s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  return std::nullopt;
}

std::optional<Relation> relation_from_string(std::string_view s) {
  for (auto r : {Relation::left_of, Relation::right_of, Relation::above, Relation::below}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

namespace {

struct Row {
  const char* id;
  Law law;
  Modifier modifier;
  int slots;
  const char* skeleton_a;
  const char* skeleton_b;
  const char* formula_a;
  const char* formula_b;
};

// clang-format off
constexpr Row kLogicRows[] = {
  // Object-focused.
  {"commutative-and", Law::commutative, Modifier::conj, 2,
   "There is (e1) and (e2)",
   "There is (e2) and (e1)",
   "e1 & e2", "e2 & e1"},
  {"commutative-or", Law::commutative, Modifier::disj, 2,
   "There is (e1) and (e2) or (e2) and (e1)",
   "There is (e2) and (e1) or (e1) and (e2)",
   "(e1 & e2) | (e2 & e1)", "(e2 & e1) | (e1 & e2)"},
  {"associative-and", Law::associative, Modifier::conj, 3,
   "There is both (e1) and (e2), along with (e3)",
   "There is (e1), along with both (e2) and (e3)",
   "(e1 & e2) & e3", "e1 & (e2 & e3)"},
  {"associative-or", Law::associative, Modifier::disj, 3,
   "There is either (e1) and (e2) and (e3) or (e1) and (e3) and (e2), otherwise there is (e2) and (e1) and (e3)",
   "There is (e1) and (e2) and (e3), otherwise there is (e1) and (e3) and (e2) or (e2) and (e1) and (e3)",
   "((e1 & e2 & e3) | (e1 & e3 & e2)) | (e2 & e1 & e3)",
   "(e1 & e2 & e3) | ((e1 & e3 & e2) | (e2 & e1 & e3))"},
  {"distributive-and", Law::distributive, Modifier::conj, 3,
   "There is (e1) with either both (e2) and (e3) or both (e3) and (e2)",
   "There is (e1) with both (e2) and (e3) or (e1) with both (e3) and (e2)",
   "e1 & ((e2 & e3) | (e3 & e2))",
   "(e1 & (e2 & e3)) | (e1 & (e3 & e2))"},
  {"distributive-or", Law::distributive, Modifier::disj, 3,
   "There is either (e1), (e2) and (e3) or both (e1), (e3) and (e2) and (e2), (e3) and (e1)",
   "There is either (e1), (e2) and (e3) or (e1), (e3) and (e2), and there is either (e1), (e2) and (e3) or (e2), (e3) and (e1)",
   "(e1 & e2 & e3) | ((e1 & e3 & e2) & (e2 & e3 & e1))",
   "((e1 & e2 & e3) | (e1 & e3 & e2)) & ((e1 & e2 & e3) | (e2 & e3 & e1))"},

  // Positional.
  {"commutative-x", Law::commutative, Modifier::x, 2,
   "There is (e1) on the right and (e2) on the left",
   "There is (e2) on the left and (e1) on the right",
   "e1@right & e2@left", "e2@left & e1@right"},
  {"commutative-y", Law::commutative, Modifier::y, 2,
   "There is (e1) on the bottom and (e2) on top",
   "There is (e2) on top and (e1) on the bottom",
   "e1@bottom & e2@top", "e2@top & e1@bottom"},
  {"associative-x", Law::associative, Modifier::x, 3,
   "There is both (e1) on the right and (e2) on the left, along with (e3) in the middle",
   "There is (e1) on the right, along with both (e2) on the left and (e3) in the middle",
   "(e1@right & e2@left) & e3@middle", "e1@right & (e2@left & e3@middle)"},
  {"associative-y", Law::associative, Modifier::y, 3,
   "There is both (e1) on the bottom and (e2) on top, along with (e3) in the middle",
   "There is (e1) on the bottom, along with both (e2) on top and (e3) in the middle",
   "(e1@bottom & e2@top) & e3@middle", "e1@bottom & (e2@top & e3@middle)"},
  {"distributive-x", Law::distributive, Modifier::x, 3,
   "There is (e1) on the right with either both (e2) on the left and (e3) in the middle or both (e3) in the middle and (e2) on the left",
   "There is (e1) on the right with both (e2) on the left and (e3) in the middle or (e1) on the right with both (e3) in the middle and (e2) on the left",
   "e1@right & ((e2@left & e3@middle) | (e3@middle & e2@left))",
   "(e1@right & (e2@left & e3@middle)) | (e1@right & (e3@middle & e2@left))"},
  {"distributive-y", Law::distributive, Modifier::y, 3,
   "There is (e1) on the bottom with either both (e2) on top and (e3) in the middle or both (e3) in the middle and (e2) on top",
   "There is (e1) on the bottom with both (e2) on top and (e3) in the middle or (e1) on the bottom with both (e3) in the middle and (e2) on top",
   "e1@bottom & ((e2@top & e3@middle) | (e3@middle & e2@top))",
   "(e1@bottom & (e2@top & e3@middle)) | (e1@bottom & (e3@middle & e2@top))"},

  // Negation.
  {"complement-and", Law::complement, Modifier::conj, 2,
   "There is (e1) and (e2)",
   "It is not the case that there is not (e1) and (e2)",
   "e1 & e2", "!!(e1 & e2)"},
  {"complement-or", Law::complement, Modifier::disj, 2,
   "There is (e1) and (e2) or (e2) and (e1)",
   "It is not the case that there is not (e1) and (e2) or (e2) and (e1)",
   "(e1 & e2) | (e2 & e1)", "!!((e1 & e2) | (e2 & e1))"},
  {"complement-x", Law::complement, Modifier::x, 2,
   "There is (e1) on the right and (e2) on the left",
   "It is not the case that there is not (e1) on the right and (e2) on the left",
   "e1@right & e2@left", "!!(e1@right & e2@left)"},
  {"complement-y", Law::complement, Modifier::y, 2,
   "There is (e1) on the bottom and (e2) on top",
   "It is not the case that there is not (e1) on the bottom and (e2) on top",
   "e1@bottom & e2@top", "!!(e1@bottom & e2@top)"},
  {"demorgan-and", Law::demorgan, Modifier::conj, 2,
   "It is not the case that there is no (e1) and no (e2) and no (e2) and no (e1)",
   "There isn't no (e1) and no (e2) or there isn't no (e2) and no (e1)",
   "!((!e1 & !e2) & (!e2 & !e1))", "!(!e1 & !e2) | !(!e2 & !e1)"},
  {"demorgan-or", Law::demorgan, Modifier::disj, 2,
   "It is not the case that there is no (e1) and no (e2) or no (e2) and no (e1)",
   "There isn't no (e1) and no (e2) and there isn't no (e2) and no (e1)",
   "!((!e1 & !e2) | (!e2 & !e1))", "!(!e1 & !e2) & !(!e2 & !e1)"},
  {"demorgan-x", Law::demorgan, Modifier::x, 2,
   "It is not the case that there is no (e1) on the right and no (e2) on the left and no (e2) on the left and no (e1) on the right",
   "There isn't no (e1) on the right and no (e2) on the left or there isn't no (e2) on the left and no (e1) on the right",
   "!((!e1@right & !e2@left) & (!e2@left & !e1@right))",
   "!(!e1@right & !e2@left) | !(!e2@left & !e1@right)"},
  {"demorgan-y", Law::demorgan, Modifier::y, 2,
   "It is not the case that there is no (e1) on the bottom and no (e2) on top and no (e2) on top and no (e1) on the bottom",
   "There isn't no (e1) on the bottom and no (e2) on top or there isn't no (e2) on top and no (e1) on the bottom",
   "!((!e1@bottom & !e2@top) & (!e2@top & !e1@bottom))",
   "!(!e1@bottom & !e2@top) | !(!e2@top & !e1@bottom)"},
};
// clang-format on

const std::array<std::string, 3> kSlotNames = {"e1", "e2", "e3"};

std::optional<Axis> axis_for(Modifier m) {
  if (m == Modifier::x) return Axis::x;
  if (m == Modifier::y) return Axis::y;
  return std::nullopt;
}

void check_entities(const TemplatePair& tp, std::span<const std::string> entities) {
  if (static_cast<int>(entities.size()) != tp.slots) {
    throw Error(Errc::arity_mismatch, "template '" + tp.id + "' takes " +
                                          std::to_string(tp.slots) + " entities, got " +
                                          std::to_string(entities.size()));
  }
  std::set<std::string_view> seen;
  for (const auto& e : entities) {
    Atom::make(e);  // label validity
    if (!seen.insert(e).second) {
      throw Error(Errc::duplicate_entity,
                  "entity '" + e + "' appears twice in template '" + tp.id + "'");
    }
  }
  if (tp.numbered_entity && entities[1] != *tp.numbered_entity) {
    throw Error(Errc::entity_mismatch, "template '" + tp.id + "' counts '" +
                                           *tp.numbered_entity + "', got '" +
                                           entities[1] + "' in slot e2");
  }
}

int resolve_count(const TemplatePair& tp, std::optional<int> count) {
  auto bound = modifier_count(tp.modifier);
  if (!bound) {
    if (count) {
      throw Error(Errc::arity_mismatch,
                  "template '" + tp.id + "' does not take a count");
    }
    return 0;
  }
  if (count && *count != *bound) {
    throw Error(Errc::arity_mismatch, "template '" + tp.id + "' is for count " +
                                          std::to_string(*bound) + ", got " +
                                          std::to_string(*count));
  }
  return *bound;
}

bool ends_with_word(std::string_view text, std::string_view word) {
  if (text.size() < word.size() + 1 || text.back() != ' ') return false;
  auto body = text.substr(0, text.size() - 1);
  if (body.size() < word.size() || body.substr(body.size() - word.size()) != word) {
    return false;
  }
  return body.size() == word.size() || body[body.size() - word.size() - 1] == ' ';
}

std::optional<int> trailing_number(std::string_view text) {
  for (int n = 1; n <= 10; ++n) {
    if (ends_with_word(text, number_word(n))) return n;
  }
  return std::nullopt;
}

std::string fill_skeleton(std::string_view skeleton, std::span<const std::string> entities) {
  std::string out;
  std::size_t i = 0;
  while (i < skeleton.size()) {
    if (skeleton[i] == '(' && i + 3 < skeleton.size() && skeleton[i + 1] == 'e' &&
        skeleton[i + 3] == ')' && skeleton[i + 2] >= '1' && skeleton[i + 2] <= '3') {
      const auto slot = static_cast<std::size_t>(skeleton[i + 2] - '1');
      const std::string& label = entities[slot];
      if (ends_with_word(out, "a") || ends_with_word(out, "an")) {
        // Skeleton's own article is re-chosen for the label.
        out.resize(out.size() - (ends_with_word(out, "a") ? 2 : 3));
        out += indefinite_article(label);
        out += ' ';
        out += label;
      } else if (ends_with_word(out, "no")) {
        out += label;
      } else if (auto n = trailing_number(out)) {
        out += *n > 1 ? pluralize(label) : label;
      } else {
        out += indefinite_article(label);
        out += ' ';
        out += label;
      }
      i += 4;
      continue;
    }
    out += skeleton[i++];
  }
  if (out.empty() || out.back() != '.') out += '.';
  return out;
}

TemplatePair from_row(const Row& r) {
  return TemplatePair{r.id,
                      r.law,
                      r.modifier,
                      r.slots,
                      r.skeleton_a,
                      r.skeleton_b,
                      parse_formula(r.formula_a),
                      parse_formula(r.formula_b),
                      std::nullopt};
}

}  // namespace

TemplatePair numbering_template(int count) {
  const std::string word(number_word(count));
  const char* verb = count == 1 ? "is" : "are";
  const Formula counted = Formula::atom(Atom::make("e2", std::nullopt, count));
  const Formula partner = Formula::atom(Atom::make("e1"));
  return TemplatePair{"numbering-" + std::to_string(count),
                      Law::numbering,
                      number_modifier(count),
                      2,
                      "There is a (e1) and " + word + " (e2)",
                      std::string("There ") + verb + " " + word + " (e2) and a (e1)",
                      Formula::conj({partner, counted}),
                      Formula::conj({counted, partner}),
                      std::nullopt};
}

TemplatePair numbering_category(const std::string& entity, int count) {
  Atom::make(entity);
  TemplatePair tp = numbering_template(count);
  tp.id += "-" + entity;
  tp.numbered_entity = entity;
  return tp;
}

const std::vector<TemplatePair>& template_registry() {
  static const std::vector<TemplatePair> registry = [] {
    std::vector<TemplatePair> out;
    for (const Row& r : kLogicRows) out.push_back(from_row(r));
    for (int n = kMinCount; n <= kMaxCount; ++n) {
      for (const auto& e : default_numbering_entities()) {
        out.push_back(numbering_category(e, n));
      }
    }
    return out;
  }();
  return registry;
}

const TemplatePair& find_template(std::string_view id) {
  const auto& reg = template_registry();
  auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& t) { return t.id == id; });
  if (it == reg.end()) {
    throw Error(Errc::unknown_template, "unknown template '" + std::string(id) + "'");
  }
  return *it;
}

std::pair<Formula, Formula> instantiate(const TemplatePair& tp,
                                        std::span<const std::string> entities) {
  check_entities(tp, entities);
  std::map<std::string, std::string> mapping;
  for (std::size_t i = 0; i < entities.size(); ++i) mapping[kSlotNames[i]] = entities[i];
  return {substitute_entities(tp.formula_a, mapping),
          substitute_entities(tp.formula_b, mapping)};
}

PromptPair render(const TemplatePair& tp, std::span<const std::string> entities,
                  std::optional<int> count) {
  check_entities(tp, entities);
  resolve_count(tp, count);
  return {fill_skeleton(tp.skeleton_a, entities), fill_skeleton(tp.skeleton_b, entities)};
}

SceneSpec expected_semantics(const TemplatePair& tp, std::span<const std::string> entities,
                             std::optional<int> count) {
  resolve_count(tp, count);
  auto [fa, fb] = instantiate(tp, entities);
  return scene_from_formula(fa, axis_for(tp.modifier));
}

namespace {

int axis_rank(Position p) {
  switch (p) {
    case Position::left:
    case Position::top:
      return 0;
    case Position::middle:
      return 1;
    case Position::right:
    case Position::bottom:
      return 2;
  }
  return 1;
}

}  // namespace

SceneSpec scene_from_formula(const Formula& f, std::optional<Axis> axis) {
  SceneSpec scene;
  std::map<std::string, Position> positions;
  for (const Atom& a : atoms_of(f)) {
    int& c = scene.expected_entities[a.entity];
    c = std::max(c, a.count.value_or(1));
    if (a.position) positions.emplace(a.entity, *a.position);
  }
  if (!axis) return scene;

  scene.axis = axis;
  std::vector<ExpectedRelation> relations;
  for (auto i = positions.begin(); i != positions.end(); ++i) {
    for (auto j = std::next(i); j != positions.end(); ++j) {
      const int ri = axis_rank(i->second);
      const int rj = axis_rank(j->second);
      if (ri == rj) continue;
      Relation rel;
      if (*axis == Axis::x) {
        rel = ri > rj ? Relation::right_of : Relation::left_of;
      } else {
        rel = ri > rj ? Relation::below : Relation::above;
      }
      relations.push_back({i->first, j->first, rel});
    }
  }
  scene.expected_relations = std::move(relations);
  return scene;
}

}  // namespace metalogic
