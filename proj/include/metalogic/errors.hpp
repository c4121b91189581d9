#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace metalogic {

enum class Errc {
  parse,
  count_out_of_range,
  invalid_atom,
  missing_atom,
  atom_budget_exceeded,
  pattern_mismatch,
  arity_mismatch,
  duplicate_entity,
  entity_mismatch,
  unknown_template,
  empty_suite,
  invalid_config,
  auth,
  rate_limited,
  content_policy,
  transport,
  backend_unavailable,
  undecodable_image,
  digest_mismatch,
  case_mismatch,
  unknown_case,
  duplicate_verdict,
  missing_stage_input,
  io,
  schema,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Formula DSL syntax error; `offset` is the byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error(Errc::parse, "at byte " + std::to_string(offset) + ": " + message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Carries every violation found while validating a config file.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace metalogic
