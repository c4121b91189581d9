#include "metalogic/logic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "metalogic/errors.hpp"

namespace metalogic {

// ---------------------------------------------------------------------------
// Atoms
// ---------------------------------------------------------------------------

std::string_view to_string(Position p) {
  switch (p) {
    case Position::left: return "left";
    case Position::right: return "right";
    case Position::top: return "top";
    case Position::bottom: return "bottom";
    case Position::middle: return "middle";
  }
  return "?";
}

std::optional<Position> position_from_string(std::string_view s) {
  for (auto p : {Position::left, Position::right, Position::top, Position::bottom,
                 Position::middle}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

namespace {

bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '-';
}

bool is_canonical_entity(std::string_view e) {
  if (e.empty() || e.front() == ' ' || e.back() == ' ') return false;
  char prev = 'x';
  for (char c : e) {
    if (c == ' ') {
      if (prev == ' ') return false;
    } else if (!is_word_char(c) || std::isupper(static_cast<unsigned char>(c))) {
      return false;
    }
    prev = c;
  }
  return true;
}

}  // namespace

Atom Atom::make(std::string entity, std::optional<Position> position,
                std::optional<int> count) {
  if (!is_canonical_entity(entity)) {
    throw Error(Errc::invalid_atom, "invalid entity label '" + entity + "'");
  }
  if (count && (*count < kMinCount || *count > kMaxCount)) {
    throw Error(Errc::count_out_of_range,
                "count " + std::to_string(*count) + " outside [1,10]");
  }
  return Atom{std::move(entity), position, count};
}

std::string to_string(const Atom& a) {
  std::string out = a.entity;
  if (a.position) {
    out += '@';
    out += to_string(*a.position);
  }
  if (a.count) {
    out += '#';
    out += std::to_string(*a.count);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Formula
// ---------------------------------------------------------------------------

struct Formula::Node {
  Kind kind;
  Atom atom;
  std::vector<Formula> children;
};

Formula Formula::atom(Atom a) {
  return Formula(std::make_shared<const Node>(Node{Kind::atom, std::move(a), {}}));
}

Formula Formula::negate(Formula child) {
  return Formula(
      std::make_shared<const Node>(Node{Kind::negation, {}, {std::move(child)}}));
}

Formula Formula::conj(std::vector<Formula> children) {
  if (children.size() < 2) {
    throw Error(Errc::arity_mismatch, "conjunction needs at least two children");
  }
  return Formula(
      std::make_shared<const Node>(Node{Kind::conjunction, {}, std::move(children)}));
}

Formula Formula::disj(std::vector<Formula> children) {
  if (children.size() < 2) {
    throw Error(Errc::arity_mismatch, "disjunction needs at least two children");
  }
  return Formula(
      std::make_shared<const Node>(Node{Kind::disjunction, {}, std::move(children)}));
}

Formula::Kind Formula::kind() const noexcept { return node_->kind; }

const Atom& Formula::atom_value() const {
  if (node_->kind != Kind::atom) {
    throw Error(Errc::pattern_mismatch, "formula is not an atom");
  }
  return node_->atom;
}

std::span<const Formula> Formula::children() const noexcept { return node_->children; }

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.node_->kind != b.node_->kind) return false;
  if (a.node_->kind == Formula::Kind::atom) return a.node_->atom == b.node_->atom;
  return a.node_->children == b.node_->children;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

void print(const Formula& f, std::string& out);

void print_child(const Formula& child, Formula::Kind parent, std::string& out) {
  bool parens = false;
  switch (parent) {
    case Formula::Kind::negation:
      parens = child.kind() == Formula::Kind::conjunction ||
               child.kind() == Formula::Kind::disjunction;
      break;
    case Formula::Kind::conjunction:
      // Nested groups stay explicit so n-ary structure round-trips.
      parens = child.kind() == Formula::Kind::conjunction ||
               child.kind() == Formula::Kind::disjunction;
      break;
    case Formula::Kind::disjunction:
      parens = child.kind() == Formula::Kind::disjunction;
      break;
    case Formula::Kind::atom:
      break;
  }
  if (parens) out += '(';
  print(child, out);
  if (parens) out += ')';
}

void print(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      out += to_string(f.atom_value());
      return;
    case Formula::Kind::negation:
      out += '!';
      print_child(f.children()[0], f.kind(), out);
      return;
    case Formula::Kind::conjunction:
    case Formula::Kind::disjunction: {
      const char* sep = f.kind() == Formula::Kind::conjunction ? " & " : " | ";
      bool first = true;
      for (const auto& c : f.children()) {
        if (!first) out += sep;
        first = false;
        print_child(c, f.kind(), out);
      }
      return;
    }
  }
}

}  // namespace

std::string to_string(const Formula& f) {
  std::string out;
  print(f, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse() {
    skip_ws();
    if (at_end()) throw ParseError(pos_, "empty formula");
    Formula f = parse_or();
    skip_ws();
    if (!at_end()) {
      throw ParseError(pos_, std::string("unexpected '") + text_[pos_] + "'");
    }
    return f;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Formula parse_or() {
    std::vector<Formula> parts{parse_and()};
    skip_ws();
    while (peek() == '|') {
      ++pos_;
      parts.push_back(parse_and());
      skip_ws();
    }
    return parts.size() == 1 ? parts.front() : Formula::disj(std::move(parts));
  }

  Formula parse_and() {
    std::vector<Formula> parts{parse_unary()};
    skip_ws();
    while (peek() == '&') {
      ++pos_;
      parts.push_back(parse_unary());
      skip_ws();
    }
    return parts.size() == 1 ? parts.front() : Formula::conj(std::move(parts));
  }

  Formula parse_unary() {
    skip_ws();
    if (at_end()) throw ParseError(pos_, "unexpected end of input");
    char c = peek();
    if (c == '!') {
      ++pos_;
      return Formula::negate(parse_unary());
    }
    if (c == '(') {
      ++pos_;
      Formula inner = parse_or();
      skip_ws();
      if (peek() != ')') throw ParseError(pos_, "expected ')'");
      ++pos_;
      return inner;
    }
    if (is_word_char(c)) return Formula::atom(parse_atom());
    throw ParseError(pos_, std::string("unexpected '") + c + "'");
  }

  std::string read_word() {
    std::size_t start = pos_;
    while (!at_end() && is_word_char(text_[pos_])) ++pos_;
    std::string w(text_.substr(start, pos_ - start));
    for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return w;
  }

  Atom parse_atom() {
    std::size_t start = pos_;
    std::string entity = read_word();
    // Multi-word labels: words separated by whitespace until an operator.
    for (;;) {
      std::size_t save = pos_;
      skip_ws();
      if (pos_ > save && is_word_char(peek())) {
        entity += ' ';
        entity += read_word();
      } else {
        pos_ = save;
        break;
      }
    }
    std::optional<Position> position;
    std::optional<int> count;
    if (peek() == '@') {
      ++pos_;
      std::size_t at = pos_;
      std::string name = read_word();
      position = position_from_string(name);
      if (!position) throw ParseError(at, "unknown position '" + name + "'");
    }
    if (peek() == '#') {
      ++pos_;
      std::size_t at = pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (at == pos_) throw ParseError(at, "expected count after '#'");
      int value = 0;
      auto digits = text_.substr(at, pos_ - at);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (ec != std::errc{} || value < kMinCount || value > kMaxCount) {
        throw Error(Errc::count_out_of_range,
                    "at byte " + std::to_string(at) + ": count " + std::string(digits) +
                        " outside [1,10]");
      }
      count = value;
    }
    try {
      return Atom::make(std::move(entity), position, count);
    } catch (const Error& e) {
      throw ParseError(start, e.what());
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Semantics
// ---------------------------------------------------------------------------

namespace {

void collect_atoms(const Formula& f, std::set<Atom>& out) {
  if (f.is_atom()) {
    out.insert(f.atom_value());
    return;
  }
  for (const auto& c : f.children()) collect_atoms(c, out);
}

}  // namespace

std::set<Atom> atoms_of(const Formula& f) {
  std::set<Atom> out;
  collect_atoms(f, out);
  return out;
}

bool evaluate(const Formula& f, const Assignment& assignment) {
  switch (f.kind()) {
    case Formula::Kind::atom: {
      auto it = assignment.find(f.atom_value());
      if (it == assignment.end()) {
        throw Error(Errc::missing_atom,
                    "assignment does not cover atom '" + to_string(f.atom_value()) + "'");
      }
      return it->second;
    }
    case Formula::Kind::negation:
      return !evaluate(f.children()[0], assignment);
    case Formula::Kind::conjunction:
      for (const auto& c : f.children()) {
        if (!evaluate(c, assignment)) return false;
      }
      return true;
    case Formula::Kind::disjunction:
      for (const auto& c : f.children()) {
        if (evaluate(c, assignment)) return true;
      }
      return false;
  }
  return false;
}

namespace {

std::vector<Atom> atom_union(const Formula& f, const Formula& g) {
  std::set<Atom> all = atoms_of(f);
  collect_atoms(g, all);
  if (all.size() > kMaxEquivalenceAtoms) {
    throw Error(Errc::atom_budget_exceeded,
                "equivalence check over " + std::to_string(all.size()) +
                    " atoms exceeds the budget of " +
                    std::to_string(kMaxEquivalenceAtoms));
  }
  return {all.begin(), all.end()};
}

// Postfix program over atom indices, evaluated 64 assignments at a time.
struct Op {
  enum Code : std::uint8_t { load, negate, conj, disj } code;
  std::uint32_t arg;  // atom index for load, arity for conj/disj
};

void compile(const Formula& f, const std::vector<Atom>& order, std::vector<Op>& prog) {
  switch (f.kind()) {
    case Formula::Kind::atom: {
      auto it = std::lower_bound(order.begin(), order.end(), f.atom_value());
      prog.push_back({Op::load, static_cast<std::uint32_t>(it - order.begin())});
      return;
    }
    case Formula::Kind::negation:
      compile(f.children()[0], order, prog);
      prog.push_back({Op::negate, 1});
      return;
    case Formula::Kind::conjunction:
    case Formula::Kind::disjunction:
      for (const auto& c : f.children()) compile(c, order, prog);
      prog.push_back({f.kind() == Formula::Kind::conjunction ? Op::conj : Op::disj,
                      static_cast<std::uint32_t>(f.children().size())});
      return;
  }
}

// Bit r of kLowPatterns[i] is bit i of r, for r in [0,64).
constexpr std::array<std::uint64_t, 6> kLowPatterns = {
    0xAAAAAAAAAAAAAAAAull, 0xCCCCCCCCCCCCCCCCull, 0xF0F0F0F0F0F0F0F0ull,
    0xFF00FF00FF00FF00ull, 0xFFFF0000FFFF0000ull, 0xFFFFFFFF00000000ull};

std::uint64_t run(const std::vector<Op>& prog, std::uint64_t chunk,
                  std::vector<std::uint64_t>& stack) {
  stack.clear();
  for (const Op& op : prog) {
    switch (op.code) {
      case Op::load:
        if (op.arg < 6) {
          stack.push_back(kLowPatterns[op.arg]);
        } else {
          stack.push_back(((chunk >> (op.arg - 6)) & 1u) ? ~0ull : 0ull);
        }
        break;
      case Op::negate:
        stack.back() = ~stack.back();
        break;
      case Op::conj:
      case Op::disj: {
        std::uint64_t acc = stack[stack.size() - op.arg];
        for (std::size_t i = stack.size() - op.arg + 1; i < stack.size(); ++i) {
          acc = op.code == Op::conj ? (acc & stack[i]) : (acc | stack[i]);
        }
        stack.resize(stack.size() - op.arg + 1);
        stack.back() = acc;
        break;
      }
    }
  }
  return stack.back();
}

}  // namespace

bool equivalent(const Formula& f, const Formula& g) {
  const std::vector<Atom> order = atom_union(f, g);
  std::vector<Op> prog_f, prog_g;
  compile(f, order, prog_f);
  compile(g, order, prog_g);

  const std::size_t n = order.size();
  const std::uint64_t valid_mask = n >= 6 ? ~0ull : ((1ull << (1u << n)) - 1ull);
  const std::int64_t chunks = n > 6 ? (std::int64_t{1} << (n - 6)) : 1;

  std::uint64_t differ = 0;
#pragma omp parallel
  {
    std::vector<std::uint64_t> stack;
    stack.reserve(prog_f.size() + prog_g.size());
#pragma omp for schedule(static) reduction(| : differ)
    for (std::int64_t c = 0; c < chunks; ++c) {
      const auto chunk = static_cast<std::uint64_t>(c);
      std::uint64_t a = run(prog_f, chunk, stack);
      std::uint64_t b = run(prog_g, chunk, stack);
      differ |= (a ^ b) & valid_mask;
    }
  }
  return differ == 0;
}

bool equivalent_reference(const Formula& f, const Formula& g) {
  const std::vector<Atom> order = atom_union(f, g);
  const std::uint64_t rows = std::uint64_t{1} << order.size();
  Assignment assignment;
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      assignment[order[i]] = ((r >> i) & 1u) != 0;
    }
    if (evaluate(f, assignment) != evaluate(g, assignment)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Rewrites
// ---------------------------------------------------------------------------

std::string_view to_string(RewriteLaw law) {
  switch (law) {
    case RewriteLaw::commutative: return "commutative";
    case RewriteLaw::associative: return "associative";
    case RewriteLaw::distributive: return "distributive";
    case RewriteLaw::complement: return "complement";
    case RewriteLaw::demorgan: return "demorgan";
  }
  return "?";
}

std::string_view to_string(Variant v) { return v == Variant::conj ? "and" : "or"; }

namespace {

[[noreturn]] void mismatch(RewriteLaw law, Variant v, std::string_view expected,
                           const Formula& f) {
  throw Error(Errc::pattern_mismatch,
              std::string(to_string(law)) + "/" + std::string(to_string(v)) +
                  " expects root " + std::string(expected) + ", got '" + to_string(f) +
                  "'");
}

Formula::Kind op_kind(Variant v) {
  return v == Variant::conj ? Formula::Kind::conjunction : Formula::Kind::disjunction;
}

Formula::Kind dual_kind(Variant v) {
  return v == Variant::conj ? Formula::Kind::disjunction : Formula::Kind::conjunction;
}

Formula make(Formula::Kind k, std::vector<Formula> children) {
  return k == Formula::Kind::conjunction ? Formula::conj(std::move(children))
                                         : Formula::disj(std::move(children));
}

}  // namespace

Formula apply_law(const Formula& f, RewriteLaw law, Variant variant) {
  const auto op = op_kind(variant);
  const auto dual = dual_kind(variant);
  const char* sym = variant == Variant::conj ? "&" : "|";
  const char* dual_sym = variant == Variant::conj ? "|" : "&";

  switch (law) {
    case RewriteLaw::commutative: {
      // P op Q  =>  Q op P (n-ary: reversed)
      if (f.kind() != op) mismatch(law, variant, std::string("P ") + sym + " Q", f);
      std::vector<Formula> kids(f.children().rbegin(), f.children().rend());
      return make(op, std::move(kids));
    }
    case RewriteLaw::associative: {
      // (P op Q) op R  =>  P op (Q op R)
      auto kids = f.children();
      if (f.kind() != op || kids.size() != 2 || kids[0].kind() != op ||
          kids[0].children().size() != 2) {
        mismatch(law, variant,
                 std::string("(P ") + sym + " Q) " + sym + " R", f);
      }
      const auto& p = kids[0].children()[0];
      const auto& q = kids[0].children()[1];
      return make(op, {p, make(op, {q, kids[1]})});
    }
    case RewriteLaw::distributive: {
      // P op (Q dual R)  =>  (P op Q) dual (P op R)
      auto kids = f.children();
      if (f.kind() != op || kids.size() != 2 || kids[1].kind() != dual) {
        mismatch(law, variant,
                 std::string("P ") + sym + " (Q " + dual_sym + " R)", f);
      }
      std::vector<Formula> out;
      for (const auto& q : kids[1].children()) out.push_back(make(op, {kids[0], q}));
      return make(dual, std::move(out));
    }
    case RewriteLaw::complement: {
      // !!P  =>  P
      if (f.kind() != Formula::Kind::negation ||
          f.children()[0].kind() != Formula::Kind::negation) {
        mismatch(law, variant, "!!P", f);
      }
      return f.children()[0].children()[0];
    }
    case RewriteLaw::demorgan: {
      // !(P op Q)  =>  !P dual !Q
      if (f.kind() != Formula::Kind::negation || f.children()[0].kind() != op) {
        mismatch(law, variant, std::string("!(P ") + sym + " Q)", f);
      }
      std::vector<Formula> out;
      for (const auto& c : f.children()[0].children()) out.push_back(Formula::negate(c));
      return make(dual, std::move(out));
    }
  }
  mismatch(law, variant, "a known law", f);
}

namespace {

template <typename AtomFn>
Formula map_atoms(const Formula& f, const AtomFn& fn) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      return Formula::atom(fn(f.atom_value()));
    case Formula::Kind::negation:
      return Formula::negate(map_atoms(f.children()[0], fn));
    case Formula::Kind::conjunction:
    case Formula::Kind::disjunction: {
      std::vector<Formula> kids;
      kids.reserve(f.children().size());
      for (const auto& c : f.children()) kids.push_back(map_atoms(c, fn));
      return make(f.kind(), std::move(kids));
    }
  }
  return f;
}

}  // namespace

Formula substitute_entities(const Formula& f,
                            const std::map<std::string, std::string>& mapping) {
  return map_atoms(f, [&](const Atom& a) {
    auto it = mapping.find(a.entity);
    if (it == mapping.end()) return a;
    return Atom::make(it->second, a.position, a.count);
  });
}

Formula with_count(const Formula& f, std::string_view entity, int count) {
  return map_atoms(f, [&](const Atom& a) {
    if (a.entity != entity) return a;
    return Atom::make(a.entity, a.position, count);
  });
}

}  // namespace metalogic
