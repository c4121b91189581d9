#pragma once

// The 60 prompt-pair templates: 20 logic-law categories (five laws, each with
// AND / OR / X-axis / Y-axis variants) and 40 numbering categories (four
// entities, counts one..ten).

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metalogic/logic.hpp"

namespace metalogic {

enum class Law { commutative, associative, distributive, complement, demorgan, numbering };

/// and / or / x / y, or n1..n10 for numbering.
enum class Modifier { conj, disj, x, y, n1, n2, n3, n4, n5, n6, n7, n8, n9, n10 };

std::string_view to_string(Law law);
std::string_view to_string(Modifier m);
std::optional<Law> law_from_string(std::string_view s);
std::optional<Modifier> modifier_from_string(std::string_view s);
Modifier number_modifier(int count);
/// 1..10 for numbering modifiers, nullopt otherwise.
std::optional<int> modifier_count(Modifier m);

enum class Axis { x, y };
enum class Relation { left_of, right_of, above, below };

std::string_view to_string(Axis a);
std::string_view to_string(Relation r);
std::optional<Axis> axis_from_string(std::string_view s);
std::optional<Relation> relation_from_string(std::string_view s);

struct ExpectedRelation {
  std::string subject;
  std::string object;
  Relation relation;

  bool operator==(const ExpectedRelation&) const = default;
};

/// What both images of a pair should show.
struct SceneSpec {
  std::map<std::string, int> expected_entities;  // label -> count
  std::optional<Axis> axis;
  std::optional<std::vector<ExpectedRelation>> expected_relations;

  bool operator==(const SceneSpec&) const = default;
};

struct TemplatePair {
  std::string id;
  Law law;
  Modifier modifier;
  int slots;
  /// Natural-language skeletons with placeholders (e1), (e2), (e3).
  std::string skeleton_a;
  std::string skeleton_b;
  /// Formulas over slot atoms named e1, e2, e3.
  Formula formula_a;
  Formula formula_b;
  /// Numbering categories bind the counted entity (slot e2).
  std::optional<std::string> numbered_entity;
};

/// 20 logic entries followed by the 40 numbering entries, in a fixed order.
const std::vector<TemplatePair>& template_registry();

/// Throws Error(unknown_template).
const TemplatePair& find_template(std::string_view id);

/// Parametric numbering template for one count (id "numbering-<n>"); the
/// counted entity is whatever fills slot e2.
TemplatePair numbering_template(int count);

/// Numbering category bound to a counted entity (id "numbering-<n>-<entity>").
TemplatePair numbering_category(const std::string& entity, int count);

inline const std::vector<std::string>& default_numbering_entities() {
  static const std::vector<std::string> v = {"cat", "dog", "apple", "banana"};
  return v;
}

struct PromptPair {
  std::string a;
  std::string b;
};

/// Slot formulas with entities substituted.
std::pair<Formula, Formula> instantiate(const TemplatePair& tp,
                                        std::span<const std::string> entities);

PromptPair render(const TemplatePair& tp, std::span<const std::string> entities,
                  std::optional<int> count = std::nullopt);

SceneSpec expected_semantics(const TemplatePair& tp, std::span<const std::string> entities,
                             std::optional<int> count = std::nullopt);

/// Positive scene read off one formula: every atom's entity is present
/// (double negations reduce to the positive claim), positions give the
/// pairwise relations along `axis`.
SceneSpec scene_from_formula(const Formula& f, std::optional<Axis> axis);

}  // namespace metalogic
