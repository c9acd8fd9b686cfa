#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coach {

// Every failure the library raises carries one of these codes. The code's
// reason string is the machine-readable token surfaced by the HTTP API and
// the CLI.
enum class Errc {
  validation,
  duplicate_id,
  unknown_risk,
  unknown_area,
  bad_source_ref,
  empty_message,
  wrong_phase,
  no_context,
  duplicate_selection,
  payload_mismatch,
  extraction_empty,
  schema_error,
  timeout,
  transport_error,
  backend_refused,
  script_mismatch,
  fixture_parse_error,
  uncovered_task,
  version_conflict,
  not_found,
  io_error,
  migration_required,
  missing_answer,
};

std::string_view reason(Errc code) noexcept;

// Domain errors are caused by the caller's input; everything else is an
// infrastructure failure (I/O, backends, fixtures).
bool is_domain_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }
  std::string_view reason() const noexcept { return coach::reason(code_); }

 private:
  Errc code_;
};

struct FieldError {
  std::string path;
  std::string message;

  bool operator==(const FieldError&) const = default;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<FieldError> errors);

  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

class VersionConflict : public Error {
 public:
  VersionConflict(std::string key, std::int64_t current)
      : Error(Errc::version_conflict,
              "version conflict on " + key + " (current " + std::to_string(current) + ")"),
        current_(current) {}

  std::int64_t current() const noexcept { return current_; }

 private:
  std::int64_t current_;
};

// Raised when structured model output cannot be recovered. The raw text is
// kept for audit.
class SchemaError : public Error {
 public:
  SchemaError(std::string raw, std::vector<FieldError> problems);

  const std::string& raw() const noexcept { return raw_; }
  const std::vector<FieldError>& problems() const noexcept { return problems_; }

 private:
  std::string raw_;
  std::vector<FieldError> problems_;
};

// Failure talking to a text-generation backend. `code()` is one of timeout,
// transport_error, backend_refused.
class BackendError : public Error {
 public:
  BackendError(Errc code, const std::string& message, std::optional<int> status = std::nullopt,
               std::string body = {})
      : Error(code, message), status_(status), body_(std::move(body)) {}

  std::optional<int> status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

  // Filled in by the gateway once the request is known.
  std::string task;
  std::string audit_hash;

 private:
  std::optional<int> status_;
  std::string body_;
};

}  // namespace coach
