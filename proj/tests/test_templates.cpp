#include <gtest/gtest.h>

#include <regex>
#include <set>

#include "metalogic/errors.hpp"
#include "metalogic/labels.hpp"
#include "metalogic/suite.hpp"
#include "metalogic/templates.hpp"

using namespace metalogic;

namespace {

std::vector<std::string> vocab() { return SuiteConfig{}.vocabulary; }

std::vector<std::vector<std::string>> tuples(const TemplatePair& tp) {
  if (!tp.numbered_entity) return entity_combinations(vocab(), tp.slots);
  std::vector<std::vector<std::string>> out;
  for (const auto& v : vocab()) {
    if (v != *tp.numbered_entity) out.push_back({v, *tp.numbered_entity});
  }
  return out;
}

}  // namespace

TEST(Registry, SixtyEntries) {
  const auto& reg = template_registry();
  ASSERT_EQ(reg.size(), 60u);
  int logic = 0, numbering = 0, positional = 0;
  std::set<std::string> ids;
  for (const auto& tp : reg) {
    ids.insert(tp.id);
    if (tp.law == Law::numbering) {
      ++numbering;
    } else {
      ++logic;
    }
    if (tp.modifier == Modifier::x || tp.modifier == Modifier::y) ++positional;
  }
  EXPECT_EQ(logic, 20);
  EXPECT_EQ(numbering, 40);
  EXPECT_EQ(ids.size(), 60u);
  // Tables 3 and 4 together carry ten positional rows (DeMorgan X/Y included).
  EXPECT_EQ(positional, 10);
}

TEST(Registry, CommutativeAndSkeleton) {
  EXPECT_EQ(find_template("commutative-and").skeleton_a, "There is (e1) and (e2)");
  EXPECT_THROW(find_template("idempotent-and"), Error);
}

TEST(Registry, PlaceholdersMatchSlots) {
  const std::regex ph(R"(\(e(\d)\))");
  for (const auto& tp : template_registry()) {
    for (const auto* sk : {&tp.skeleton_a, &tp.skeleton_b}) {
      std::set<int> seen;
      for (auto it = std::sregex_iterator(sk->begin(), sk->end(), ph); it != std::sregex_iterator();
           ++it) {
        seen.insert(std::stoi((*it)[1]));
      }
      std::set<int> want;
      for (int i = 1; i <= tp.slots; ++i) want.insert(i);
      EXPECT_EQ(seen, want) << tp.id;
    }
  }
}

TEST(Registry, SoundForEveryInstantiation) {
  for (const auto& tp : template_registry()) {
    EXPECT_TRUE(equivalent(tp.formula_a, tp.formula_b)) << tp.id;
    for (const auto& t : tuples(tp)) {
      const auto [fa, fb] = instantiate(tp, t);
      EXPECT_TRUE(equivalent_reference(fa, fb)) << tp.id;
    }
  }
}

TEST(Render, Examples) {
  auto p = render(find_template("commutative-and"), std::vector<std::string>{"cat", "dog"});
  EXPECT_EQ(p.a, "There is a cat and a dog.");
  EXPECT_EQ(p.b, "There is a dog and a cat.");

  p = render(numbering_template(2), std::vector<std::string>{"cat", "dog"}, 2);
  EXPECT_EQ(p.a, "There is a cat and two dogs.");
  EXPECT_EQ(p.b, "There are two dogs and a cat.");

  p = render(find_template("complement-and"), std::vector<std::string>{"cat", "dog"});
  EXPECT_EQ(p.a, "There is a cat and a dog.");
  EXPECT_EQ(p.b, "It is not the case that there is not a cat and a dog.");

  p = render(find_template("commutative-and"), std::vector<std::string>{"apple", "cow"});
  EXPECT_EQ(p.a, "There is an apple and a cow.");
}

TEST(Render, NumberingSingularAndBound) {
  auto p = render(numbering_category("apple", 1), std::vector<std::string>{"cat", "apple"});
  EXPECT_EQ(p.a, "There is a cat and one apple.");
  EXPECT_EQ(p.b, "There is one apple and a cat.");
  p = render(numbering_category("banana", 10), std::vector<std::string>{"cow", "banana"});
  EXPECT_EQ(p.a, "There is a cow and ten bananas.");
}

TEST(Render, Errors) {
  const auto& tp = find_template("commutative-and");
  try {
    render(tp, std::vector<std::string>{"cat"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::arity_mismatch);
  }
  try {
    render(tp, std::vector<std::string>{"cat", "cat"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::duplicate_entity);
  }
  EXPECT_THROW(render(tp, std::vector<std::string>{"cat", "dog"}, 3), Error);
  EXPECT_THROW(render(numbering_template(3), std::vector<std::string>{"cat", "dog"}, 11), Error);
}

TEST(Render, NoPlaceholdersAndDistinctSides) {
  for (const auto& tp : template_registry()) {
    for (const auto& t : tuples(tp)) {
      const auto p = render(tp, t, modifier_count(tp.modifier));
      for (const auto* s : {&p.a, &p.b}) {
        EXPECT_EQ(s->find("(e"), std::string::npos) << *s;
        ASSERT_FALSE(s->empty());
        EXPECT_EQ(s->back(), '.');
      }
      EXPECT_NE(p.a, p.b) << tp.id;
    }
  }
}

TEST(Semantics, Examples) {
  auto s = expected_semantics(find_template("commutative-x"), std::vector<std::string>{"cat", "dog"});
  EXPECT_EQ(s.expected_entities, (std::map<std::string, int>{{"cat", 1}, {"dog", 1}}));
  ASSERT_TRUE(s.axis);
  EXPECT_EQ(*s.axis, Axis::x);
  ASSERT_TRUE(s.expected_relations);
  ASSERT_EQ(s.expected_relations->size(), 1u);
  EXPECT_EQ(s.expected_relations->front(), (ExpectedRelation{"cat", "dog", Relation::right_of}));

  s = expected_semantics(find_template("complement-and"), std::vector<std::string>{"cat", "dog"});
  EXPECT_EQ(s.expected_entities, (std::map<std::string, int>{{"cat", 1}, {"dog", 1}}));
  EXPECT_FALSE(s.axis);
  EXPECT_FALSE(s.expected_relations);

  s = expected_semantics(numbering_template(5), std::vector<std::string>{"cat", "banana"}, 5);
  EXPECT_EQ(s.expected_entities, (std::map<std::string, int>{{"banana", 5}, {"cat", 1}}));
}

TEST(Semantics, AxisIffPositionalAndBothSidesAgree) {
  for (const auto& tp : template_registry()) {
    const bool positional = tp.modifier == Modifier::x || tp.modifier == Modifier::y;
    for (const auto& t : tuples(tp)) {
      const auto count = modifier_count(tp.modifier);
      const auto s = expected_semantics(tp, t, count);
      EXPECT_EQ(s.axis.has_value(), positional) << tp.id;
      EXPECT_EQ(s.expected_relations.has_value(), positional) << tp.id;
      for (const auto& [label, n] : s.expected_entities) {
        EXPECT_NE(std::find(t.begin(), t.end(), label), t.end());
      }
      const auto [fa, fb] = instantiate(tp, t);
      const std::optional<Axis> axis = s.axis;
      EXPECT_EQ(scene_from_formula(fa, axis), scene_from_formula(fb, axis)) << tp.id;
    }
  }
}

TEST(Semantics, PluralsNormalizeBack) {
  const LabelNormalizer norm;
  for (const auto& e : default_numbering_entities()) {
    EXPECT_EQ(norm.normalize(pluralize(e)), e);
  }
  for (const char* e : {"cow", "bus", "traffic light", "sheep", "mouse", "box", "knife"}) {
    EXPECT_EQ(singularize(pluralize(e)), e) << e;
  }
}

TEST(Labels, ArticlesAndNumberWords) {
  EXPECT_EQ(indefinite_article("apple"), "an");
  EXPECT_EQ(indefinite_article("banana"), "a");
  EXPECT_EQ(number_word(1), "one");
  EXPECT_EQ(number_word(10), "ten");
  EXPECT_THROW(number_word(0), Error);
  EXPECT_THROW(number_word(11), Error);
}

TEST(Labels, NormalizerSynonymsAndCase) {
  const LabelNormalizer norm;
  EXPECT_EQ(norm.normalize("  Puppy "), "dog");
  EXPECT_EQ(norm.normalize("Kittens"), "cat");
  EXPECT_EQ(norm.normalize("dogs"), "dog");
  EXPECT_EQ(norm.normalize("Traffic   Lights"), "traffic light");
  EXPECT_EQ(norm.normalize("bus"), "bus");
}
