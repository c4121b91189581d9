#include "metalogic/errors.hpp"

namespace metalogic {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::parse: return "parse";
    case Errc::count_out_of_range: return "count_out_of_range";
    case Errc::invalid_atom: return "invalid_atom";
    case Errc::missing_atom: return "missing_atom";
    case Errc::atom_budget_exceeded: return "atom_budget_exceeded";
    case Errc::pattern_mismatch: return "pattern_mismatch";
    case Errc::arity_mismatch: return "arity_mismatch";
    case Errc::duplicate_entity: return "duplicate_entity";
    case Errc::entity_mismatch: return "entity_mismatch";
    case Errc::unknown_template: return "unknown_template";
    case Errc::empty_suite: return "empty_suite";
    case Errc::invalid_config: return "invalid_config";
    case Errc::auth: return "auth";
    case Errc::rate_limited: return "rate_limited";
    case Errc::content_policy: return "content_policy";
    case Errc::transport: return "transport";
    case Errc::backend_unavailable: return "backend_unavailable";
    case Errc::undecodable_image: return "undecodable_image";
    case Errc::digest_mismatch: return "digest_mismatch";
    case Errc::case_mismatch: return "case_mismatch";
    case Errc::unknown_case: return "unknown_case";
    case Errc::duplicate_verdict: return "duplicate_verdict";
    case Errc::missing_stage_input: return "missing_stage_input";
    case Errc::io: return "io";
    case Errc::schema: return "schema";
  }
  return "unknown";
}

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "invalid config:";
  for (const auto& line : v) {
    out += "\n  ";
    out += line;
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(Errc::invalid_config, join_violations(violations)),
      violations_(std::move(violations)) {}

}  // namespace metalogic
