#pragma once

// Shared helpers for the test binaries: a small seeded generator (kept
// separate from the library PRNG so oracles do not share code with the
// subject) and random formula / detection builders.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "metalogic/backends.hpp"
#include "metalogic/logic.hpp"

namespace mltest {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  // xorshift64*
  std::uint64_t next() {
    s_ ^= s_ >> 12;
    s_ ^= s_ << 25;
    s_ ^= s_ >> 27;
    return s_ * 0x2545F4914F6CDD1DULL;
  }
  int range(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double real(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool coin() { return next() & 1; }

 private:
  std::uint64_t s_;
};

inline metalogic::Atom random_atom(Gen& g, int distinct) {
  static const char* names[] = {"cat", "dog", "apple", "banana", "cow", "traffic light"};
  metalogic::Atom a;
  a.entity = names[g.range(0, std::min(distinct, 6) - 1)];
  if (g.range(0, 3) == 0) a.position = static_cast<metalogic::Position>(g.range(0, 4));
  if (g.range(0, 4) == 0) a.count = g.range(1, 10);
  return a;
}

inline metalogic::Formula random_formula(Gen& g, int depth, int distinct = 4) {
  using metalogic::Formula;
  if (depth == 0 || g.range(0, 3) == 0) return Formula::atom(random_atom(g, distinct));
  switch (g.range(0, 2)) {
    case 0: return Formula::negate(random_formula(g, depth - 1, distinct));
    default: {
      std::vector<Formula> kids;
      const int n = g.range(2, 3);
      for (int i = 0; i < n; ++i) kids.push_back(random_formula(g, depth - 1, distinct));
      return g.coin() ? Formula::conj(std::move(kids)) : Formula::disj(std::move(kids));
    }
  }
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("metalogic_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline metalogic::Detection det(std::string label, double x1, double y1, double x2, double y2,
                                double score = 0.9) {
  return {std::move(label), score, {x1, y1, x2, y2}};
}

}  // namespace mltest
