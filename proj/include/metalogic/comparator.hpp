#pragma once

// Image-pair alignment: entity-multiset equality first, then relative order
// of bounding-box centroids along the case's axis.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metalogic/backends.hpp"
#include "metalogic/labels.hpp"
#include "metalogic/suite.hpp"

namespace metalogic {

inline constexpr std::string_view kExtraPrefix = "extra:";

struct EntityMultiset {
  std::map<std::string, int> counts;
  int total = 0;

  bool operator==(const EntityMultiset&) const = default;
};

/// How out-of-universe labels affect the presence stage.
enum class ExtraLabelMode { count, ignore };

/// Normalized labels; when `universe` is non-empty, labels outside it are
/// kept as "extra:<label>" (or dropped under ExtraLabelMode::ignore).
EntityMultiset entity_multiset(const DetectionResult& det, const LabelNormalizer& normalizer,
                               const std::set<std::string>& universe = {},
                               ExtraLabelMode mode = ExtraLabelMode::count);

/// label -> (count_a, count_b), only for labels whose counts differ.
using PresenceDiff = std::map<std::string, std::pair<int, int>>;

PresenceDiff compare_presence(const EntityMultiset& a, const EntityMultiset& b);

enum class Order { before, after, tied };
std::string_view to_string(Order o);
Order reversed(Order o) noexcept;

struct InstanceOrder {
  std::string label_i;
  int instance_i;
  std::string label_j;
  int instance_j;
  Order order;

  bool operator==(const InstanceOrder&) const = default;
};

/// Pairwise order of in-universe instances along one axis. Instances of a
/// label are indexed by ascending coordinate; each unordered pair is stored
/// once with (label_i, instance_i) < (label_j, instance_j).
struct OrderRelation {
  Axis axis = Axis::x;
  std::vector<InstanceOrder> relations;

  /// Order of (li,ii) relative to (lj,ij); the reverse lookup is derived.
  std::optional<Order> order(std::string_view li, int ii, std::string_view lj, int ij) const;
};

inline constexpr double kDefaultEpsilonFraction = 0.01;

/// Centroids within epsilon_fraction * (image width or height) are tied;
/// smaller y is "top".
OrderRelation relative_order(const DetectionResult& det, Axis axis,
                             const std::set<std::string>& universe,
                             const LabelNormalizer& normalizer,
                             double epsilon_fraction = kDefaultEpsilonFraction);

struct PositionConflict {
  std::string label_i;
  int instance_i;
  std::string label_j;
  int instance_j;
  Order order_a;
  Order order_b;

  bool operator==(const PositionConflict&) const = default;
};

enum class ErrorCategory {
  x_misposition,
  y_misposition,
  entity_duplication,
  entity_omission,
  optical_character,
};

std::string_view to_string(ErrorCategory c);
std::optional<ErrorCategory> category_from_string(std::string_view s);

struct Verdict {
  std::string case_id;
  bool aligned = true;
  PresenceDiff presence_diff;
  std::vector<PositionConflict> position_diff;
  std::vector<ErrorCategory> categories;
  /// Misaligned but no category rule matched.
  bool uncategorized = false;
  std::vector<std::string> notes;

  bool operator==(const Verdict&) const = default;
};

struct ComparatorConfig {
  double epsilon_fraction = kDefaultEpsilonFraction;
  ExtraLabelMode extra_mode = ExtraLabelMode::count;
  LabelNormalizer normalizer;
};

/// Stage 1 presence, stage 2 position (only for axis cases with equal
/// presence). Categories are left empty; see classify(). Throws
/// Error(case_mismatch) when a detection belongs to another case.
Verdict compare_pair(const TestCase& tc, const DetectionResult& a, const DetectionResult& b,
                     const ComparatorConfig& config = {});

}  // namespace metalogic
