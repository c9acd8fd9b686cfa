#include "coach/error.hpp"

namespace coach {

std::string_view reason(Errc code) noexcept {
  switch (code) {
    case Errc::validation: return "validation";
    case Errc::duplicate_id: return "duplicate_id";
    case Errc::unknown_risk: return "unknown_risk";
    case Errc::unknown_area: return "unknown_area";
    case Errc::bad_source_ref: return "bad_source_ref";
    case Errc::empty_message: return "empty_message";
    case Errc::wrong_phase: return "wrong_phase";
    case Errc::no_context: return "no_context";
    case Errc::duplicate_selection: return "duplicate_selection";
    case Errc::payload_mismatch: return "payload_mismatch";
    case Errc::extraction_empty: return "extraction_empty";
    case Errc::schema_error: return "schema_error";
    case Errc::timeout: return "timeout";
    case Errc::transport_error: return "transport_error";
    case Errc::backend_refused: return "backend_refused";
    case Errc::script_mismatch: return "script_mismatch";
    case Errc::fixture_parse_error: return "fixture_parse_error";
    case Errc::uncovered_task: return "uncovered_task";
    case Errc::version_conflict: return "version_conflict";
    case Errc::not_found: return "not_found";
    case Errc::io_error: return "io_error";
    case Errc::migration_required: return "migration_required";
    case Errc::missing_answer: return "missing_answer";
  }
  return "unknown";
}

bool is_domain_error(Errc code) noexcept {
  switch (code) {
    case Errc::validation:
    case Errc::duplicate_id:
    case Errc::unknown_risk:
    case Errc::unknown_area:
    case Errc::bad_source_ref:
    case Errc::empty_message:
    case Errc::wrong_phase:
    case Errc::no_context:
    case Errc::duplicate_selection:
    case Errc::payload_mismatch:
    case Errc::extraction_empty:
    case Errc::version_conflict:
    case Errc::not_found:
    case Errc::missing_answer:
      return true;
    default:
      return false;
  }
}

namespace {

std::string join_errors(const std::vector<FieldError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "; ";
    out += e.path.empty() ? e.message : e.path + ": " + e.message;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<FieldError> errors)
    : Error(Errc::validation, join_errors(errors)), errors_(std::move(errors)) {}

SchemaError::SchemaError(std::string raw, std::vector<FieldError> problems)
    : Error(Errc::schema_error, "structured output rejected: " + join_errors(problems)),
      raw_(std::move(raw)),
      problems_(std::move(problems)) {}

}  // namespace coach
