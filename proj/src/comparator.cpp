#include "metalogic/comparator.hpp"

#include <algorithm>
#include <cmath>

#include "metalogic/errors.hpp"

namespace metalogic {

EntityMultiset entity_multiset(const DetectionResult& det, const LabelNormalizer& normalizer,
                               const std::set<std::string>& universe, ExtraLabelMode mode) {
  EntityMultiset out;
  for (const auto& d : det.detections) {
    std::string label = normalizer.normalize(d.label);
    if (!universe.empty() && !universe.contains(label)) {
      if (mode == ExtraLabelMode::ignore) continue;
      label = std::string(kExtraPrefix) + label;
    }
    ++out.counts[label];
    ++out.total;
  }
  return out;
}

PresenceDiff compare_presence(const EntityMultiset& a, const EntityMultiset& b) {
  PresenceDiff diff;
  auto count = [](const EntityMultiset& m, const std::string& label) {
    auto it = m.counts.find(label);
    return it == m.counts.end() ? 0 : it->second;
  };
  for (const auto* m : {&a, &b}) {
    for (const auto& [label, n] : m->counts) {
      const int ca = count(a, label), cb = count(b, label);
      if (ca != cb) diff[label] = {ca, cb};
    }
  }
  return diff;
}

std::string_view to_string(Order o) {
  switch (o) {
    case Order::before: return "before";
    case Order::after: return "after";
    case Order::tied: return "tied";
  }
  return "tied";
}

Order reversed(Order o) noexcept {
  if (o == Order::before) return Order::after;
  if (o == Order::after) return Order::before;
  return Order::tied;
}

std::optional<Order> OrderRelation::order(std::string_view li, int ii, std::string_view lj,
                                          int ij) const {
  for (const auto& r : relations) {
    if (r.label_i == li && r.instance_i == ii && r.label_j == lj && r.instance_j == ij) {
      return r.order;
    }
    if (r.label_i == lj && r.instance_i == ij && r.label_j == li && r.instance_j == ii) {
      return reversed(r.order);
    }
  }
  return std::nullopt;
}

OrderRelation relative_order(const DetectionResult& det, Axis axis,
                             const std::set<std::string>& universe,
                             const LabelNormalizer& normalizer, double epsilon_fraction) {
  struct Inst {
    std::string label;
    double along;
    double across;
  };
  std::map<std::string, std::vector<Inst>> by_label;
  for (const auto& d : det.detections) {
    std::string label = normalizer.normalize(d.label);
    if (!universe.empty() && !universe.contains(label)) continue;
    const double x = d.bbox.cx(), y = d.bbox.cy();
    by_label[label].push_back({label, axis == Axis::x ? x : y, axis == Axis::x ? y : x});
  }
  std::vector<std::pair<Inst, int>> flat;
  for (auto& [label, v] : by_label) {
    std::sort(v.begin(), v.end(), [](const Inst& p, const Inst& q) {
      return p.along != q.along ? p.along < q.along : p.across < q.across;
    });
    for (std::size_t k = 0; k < v.size(); ++k) flat.emplace_back(v[k], static_cast<int>(k));
  }
  const double eps = epsilon_fraction * (axis == Axis::x ? det.width : det.height);
  OrderRelation out;
  out.axis = axis;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    for (std::size_t j = i + 1; j < flat.size(); ++j) {
      const auto& [p, pi] = flat[i];
      const auto& [q, qi] = flat[j];
      Order o = Order::tied;
      if (std::abs(p.along - q.along) > eps) o = p.along < q.along ? Order::before : Order::after;
      out.relations.push_back({p.label, pi, q.label, qi, o});
    }
  }
  return out;
}

std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::x_misposition: return "x_misposition";
    case ErrorCategory::y_misposition: return "y_misposition";
    case ErrorCategory::entity_duplication: return "entity_duplication";
    case ErrorCategory::entity_omission: return "entity_omission";
    case ErrorCategory::optical_character: return "optical_character";
  }
  return "";
}

std::optional<ErrorCategory> category_from_string(std::string_view s) {
  for (auto c : {ErrorCategory::x_misposition, ErrorCategory::y_misposition,
                 ErrorCategory::entity_duplication, ErrorCategory::entity_omission,
                 ErrorCategory::optical_character}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

Verdict compare_pair(const TestCase& tc, const DetectionResult& a, const DetectionResult& b,
                     const ComparatorConfig& config) {
  for (const auto* d : {&a, &b}) {
    if (!d->image.case_id.empty() && d->image.case_id != tc.case_id) {
      throw Error(Errc::case_mismatch, "detections for '" + d->image.case_id +
                                           "' compared under case '" + tc.case_id + "'");
    }
  }
  std::set<std::string> universe;
  for (const auto& [label, n] : tc.scene.expected_entities) universe.insert(label);

  Verdict v;
  v.case_id = tc.case_id;
  const auto ma = entity_multiset(a, config.normalizer, universe, config.extra_mode);
  const auto mb = entity_multiset(b, config.normalizer, universe, config.extra_mode);
  v.presence_diff = compare_presence(ma, mb);
  if (!v.presence_diff.empty()) {
    v.aligned = false;
    return v;
  }
  if (!tc.scene.axis) return v;

  const auto ra = relative_order(a, *tc.scene.axis, universe, config.normalizer,
                                 config.epsilon_fraction);
  const auto rb = relative_order(b, *tc.scene.axis, universe, config.normalizer,
                                 config.epsilon_fraction);
  // Equal multisets give identical pair lists in identical order.
  for (std::size_t k = 0; k < ra.relations.size() && k < rb.relations.size(); ++k) {
    const auto& x = ra.relations[k];
    const auto& y = rb.relations[k];
    if (x.order != y.order && x.order != Order::tied && y.order != Order::tied) {
      v.position_diff.push_back({x.label_i, x.instance_i, x.label_j, x.instance_j, x.order,
                                 y.order});
    }
  }
  v.aligned = v.position_diff.empty();
  return v;
}

}  // namespace metalogic
