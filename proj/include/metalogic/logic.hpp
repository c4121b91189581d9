#pragma once

// Propositional formulas over entity/position/count atoms, the formula DSL,
// root-level equivalence-law rewrites and the truth-table equivalence oracle.

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metalogic {

enum class Position { left, right, top, bottom, middle };

std::string_view to_string(Position p);
std::optional<Position> position_from_string(std::string_view s);

inline constexpr int kMinCount = 1;
inline constexpr int kMaxCount = 10;

/// A predicate "entity [at position] [count times]". Distinct atoms are
/// independent propositional variables.
struct Atom {
  std::string entity;
  std::optional<Position> position;
  std::optional<int> count;

  /// Validates the invariants; throws Error(invalid_atom | count_out_of_range).
  static Atom make(std::string entity, std::optional<Position> position = {},
                   std::optional<int> count = {});

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
};

std::string to_string(const Atom& a);

/// Immutable propositional formula. Copies share structure.
class Formula {
 public:
  enum class Kind { atom, negation, conjunction, disjunction };

  static Formula atom(Atom a);
  static Formula negate(Formula child);
  /// n-ary, order preserving; requires at least two children.
  static Formula conj(std::vector<Formula> children);
  static Formula disj(std::vector<Formula> children);

  Kind kind() const noexcept;
  /// Only valid for Kind::atom.
  const Atom& atom_value() const;
  /// Empty for atoms; one element for negation.
  std::span<const Formula> children() const noexcept;

  bool is_atom() const noexcept { return kind() == Kind::atom; }

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Canonical text form; parse_formula(to_string(f)) == f.
std::string to_string(const Formula& f);

/// Grammar: atoms `entity[@pos][#count]`, `!` binds tightest, then `&`,
/// then `|`; parentheses group. Entities may be multi-word ("traffic light").
Formula parse_formula(std::string_view text);

/// Atoms in ascending order.
std::set<Atom> atoms_of(const Formula& f);

using Assignment = std::map<Atom, bool>;

/// Throws Error(missing_atom) naming the first uncovered atom.
bool evaluate(const Formula& f, const Assignment& assignment);

inline constexpr std::size_t kMaxEquivalenceAtoms = 20;

/// Truth-table equivalence over the union of atom sets. Bit-sliced: 64
/// assignments per word, OpenMP-parallel over words.
bool equivalent(const Formula& f, const Formula& g);

/// Serial reference: one `evaluate` per assignment row.
bool equivalent_reference(const Formula& f, const Formula& g);

enum class RewriteLaw { commutative, associative, distributive, complement, demorgan };
enum class Variant { conj, disj };

std::string_view to_string(RewriteLaw law);
std::string_view to_string(Variant v);

/// Root-level rewrite from the left-hand pattern to the right-hand side.
/// Throws Error(pattern_mismatch) when the root does not fit.
Formula apply_law(const Formula& f, RewriteLaw law, Variant variant);

/// Replaces atom entities through `mapping` simultaneously; unmapped
/// entities are kept.
Formula substitute_entities(const Formula& f,
                            const std::map<std::string, std::string>& mapping);

/// Returns `f` with every atom whose entity is `entity` given count `count`.
Formula with_count(const Formula& f, std::string_view entity, int count);

}  // namespace metalogic
