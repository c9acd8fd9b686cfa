#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "coach/prompts.hpp"
#include "coach/util.hpp"

namespace coach {

struct CompletionRequest {
  PromptTask task = PromptTask::context_tagging;
  RenderedPrompt prompt;
  int max_output_units = 1024;
  std::chrono::milliseconds deadline{60000};
  int attempt = 0;
};

struct CompletionResponse {
  std::string text;
  std::string backend_id;
  std::chrono::milliseconds latency{0};
  bool truncated = false;
};

// Contract every text-generation backend satisfies. Failures are reported as
// BackendError (timeout, transport_error, backend_refused) or, for the test
// backends, Error(script_mismatch / uncovered_task).
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual std::string id() const = 0;
};

// --- scripted playback ----------------------------------------------------

struct ScriptEntry {
  PromptTask task;
  std::string response;
};

// Replays canned responses in order. A request whose task differs from the
// next entry, or any request after the script is exhausted, is a hard
// script_mismatch error.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<ScriptEntry> entries, std::string name = "scripted");

  // Fixture document: {"entries": [{"task": "RiskDiagnosis", "response": <string or JSON value>}]}
  static std::unique_ptr<ScriptedBackend> from_json(const json& fixture, std::string name = "scripted");
  static std::unique_ptr<ScriptedBackend> load_script(const std::filesystem::path& fixture);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return "scripted:" + name_; }

  std::size_t served() const;
  bool exhausted() const;

 private:
  std::vector<ScriptEntry> entries_;
  std::string name_;
  mutable std::mutex mu_;
  std::size_t next_ = 0;
};

// --- rule-based mock ------------------------------------------------------

// Keyword-driven deterministic backend. Tables are keyed by task wire name:
//
//   ContextTagging:  {"rules": [{"pattern": re, "key": K}]}
//     every "[ref:N] text" line of the task block matching `re` yields
//     {key: K, value: <capture group 1, or the line>, source_seq: N}
//   RiskDiagnosis:   {"rules": [{"pattern": re, "risk_id": R}]}
//     every "Key: value [ref:N]" context line whose value matches `re`
//     contributes evidence N to risk R
//   any other task:  {"rules": [{"pattern": re, "output": V}], "default": V}
//     the first rule matching the context or task block wins; V is emitted
//     verbatim (strings as-is, other values serialized)
//
// Patterns are case-insensitive ECMAScript regular expressions.
class RuleMockBackend : public Backend {
 public:
  explicit RuleMockBackend(const json& tables);
  static std::unique_ptr<RuleMockBackend> load(const std::filesystem::path& tables);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return "rule-mock"; }

 private:
  struct Rule {
    std::regex pattern;
    std::string source;
    std::string target;  // key / risk id
    json output;
  };
  struct Table {
    std::vector<Rule> rules;
    std::optional<json> fallback;
  };

  std::string tagging(const Table& t, const RenderedPrompt& p) const;
  std::string diagnosis(const Table& t, const RenderedPrompt& p) const;
  std::string first_match(const Table& t, const RenderedPrompt& p) const;

  std::map<PromptTask, Table> tables_;
};

// Mirrors the rule mock's tagging value rule: trims, drops a trailing period,
// capitalizes the first letter.
std::string mock_tag_value(std::string_view captured);

// --- live HTTP backend ----------------------------------------------------

struct LiveConfig {
  std::string endpoint;  // base URL, e.g. https://host/v1
  std::string credential;
  std::string model;
  std::chrono::milliseconds timeout{60000};
  int retries = 2;
  std::chrono::milliseconds backoff{200};
};

// Reads COACH_LLM_ENDPOINT, COACH_LLM_API_KEY, COACH_LLM_MODEL,
// COACH_LLM_TIMEOUT_MS and COACH_LLM_RETRIES.
LiveConfig live_config_from_env();
LiveConfig live_config_from_json(const json& doc);

// OpenAI-compatible chat-completion client. Transport failures are retried up
// to `retries` times with exponential backoff; the request deadline bounds
// the whole exchange.
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(LiveConfig config);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return "live:" + config_.model; }

  // Attempts used by the most recent call.
  int attempts_made() const { return last_attempts_.load(); }

 private:
  LiveConfig config_;
  std::atomic<int> last_attempts_{0};
};

// --- gateway --------------------------------------------------------------

struct GatewayRecord {
  std::string task;
  std::string prompt_hash;
  std::string template_hash;
  std::string backend_id;
  std::int64_t latency_ms = 0;
  bool truncated = false;
  int attempt = 0;
  std::string outcome;  // "ok" or an error reason
  Timestamp at{};
};

json to_json(const GatewayRecord& r);

// Validates requests, forwards them to the backend and keeps an audit record
// of every exchange.
class Gateway {
 public:
  explicit Gateway(Backend& backend, Clock clock = system_clock());

  CompletionResponse complete(const CompletionRequest& request);

  std::string backend_id() const { return backend_.id(); }
  std::vector<GatewayRecord> records() const;
  std::vector<GatewayRecord> take_records();

 private:
  Backend& backend_;
  Clock clock_;
  mutable std::mutex mu_;
  std::vector<GatewayRecord> records_;
};

// "scripted:FILE", "mock:FILE" or "live" (configured from the environment).
std::unique_ptr<Backend> make_backend(std::string_view spec);

}  // namespace coach
