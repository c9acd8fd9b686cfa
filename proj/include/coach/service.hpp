#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "coach/dashboards.hpp"
#include "coach/gateway.hpp"
#include "coach/model_registry.hpp"
#include "coach/pipeline.hpp"
#include "coach/session.hpp"
#include "coach/store.hpp"

namespace coach {

// What the sessions collection holds for one session.
struct SessionBundle {
  Session session;
  std::optional<AgendaDocument> agenda_document;
  std::vector<StrategySuggestion> strategies;
  std::map<std::string, json> idempotency;  // Idempotency-Key -> first response

  bool operator==(const SessionBundle&) const = default;
};

json to_json(const SessionBundle& b);
SessionBundle session_bundle_from_json(const json& doc);

struct ServiceOptions {
  Clock clock = system_clock();
  IdSource ids = random_ids();
  PipelineOptions pipeline{};
};

// Result of one novice turn: the stored bundle and the transcript messages
// the turn appended.
struct Turn {
  SessionBundle bundle;
  std::vector<ChatMessage> messages;
};

json to_json(const Turn& t);

// Runs the coaching workflow on top of a store and a text-generation backend.
// Every operation is all-or-nothing: when a chain step fails, nothing about
// the session is written (gateway audit records are kept).
class CoachService {
 public:
  CoachService(Store& store, Backend& backend, ServiceOptions options = {});

  // --- models ---
  // Current models; seeds the store on first use.
  CoachingModel current_model();
  // Models as they were at the given versions.
  CoachingModel model_at(std::int64_t project_version, std::int64_t risk_version);

  // `expected_version` is the model version the caller edited against.
  RiskModel add_risk(const std::string& author, RiskDefinition def, std::optional<std::int64_t> expected_version = {});
  RiskModel revise_risk(const std::string& author, const std::string& id, const RiskPatch& patch,
                        std::optional<std::int64_t> expected_version = {});
  RiskModel set_risk_enabled(const std::string& author, const std::string& id, bool enabled,
                             std::optional<std::int64_t> expected_version = {});
  ProjectModel revise_area(const std::string& author, const std::string& id, const AreaPatch& patch,
                           std::optional<std::int64_t> expected_version = {});
  AuditLog model_audit();
  // NDJSON gateway records for a session.
  std::string gateway_audit(const std::string& session_id);

  // --- sessions ---
  Turn create_session(const std::string& novice_id);
  Turn post_message(const std::string& session_id, const std::string& text,
                    const std::optional<std::string>& idempotency_key = {});
  SessionBundle set_agenda(const std::string& session_id, const std::vector<std::string>& selected,
                           const std::string& notes);
  // Stores the goals; refreshes strategies once the session is Complete.
  MentorGoals set_goals(const std::string& session_id, const std::vector<std::string>& focus_risk_ids,
                        const std::string& desired_outcomes);
  SessionBundle rediagnose(const std::string& session_id);

  SessionBundle load(const std::string& session_id);
  std::optional<MentorGoals> goals(const std::string& session_id);
  std::vector<RecordSummary> list_sessions(const ListFilter& filter = {});

  NoviceDashboard novice_dashboard(const std::string& session_id);
  MentorDashboard mentor_dashboard(const std::string& session_id);

  std::vector<PipelineEvent> last_events() const;

 private:
  struct Loaded {
    SessionBundle bundle;
    std::int64_t store_version = 0;
  };

  Loaded load_bundle(const std::string& session_id);
  void save_bundle(const SessionBundle& b, std::int64_t expected);
  void ensure_seeded();
  template <typename Model>
  std::pair<Model, std::int64_t> load_model(const std::string& key);
  void commit_model(const std::string& key, const json& doc, std::int64_t expected, std::int64_t model_version,
                    const AuditEntry& entry);
  EditStamp stamp(const std::string& author);
  std::shared_ptr<std::mutex> lock_for(const std::string& session_id);

  // Drives the chain forward until the novice has to speak again.
  Session advance(Session s, const CoachingModel& model, Pipeline& pipeline);
  std::vector<StrategySuggestion> strategies_for(const Session& s, const CoachingModel& model, Pipeline& pipeline);
  void flush_gateway(const std::string& session_id, Gateway& gateway);

  Store& store_;
  Backend& backend_;
  ServiceOptions options_;
  SessionEngine engine_;
  std::mutex model_mu_;
  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_locks_;
  mutable std::mutex events_mu_;
  std::vector<PipelineEvent> last_events_;
};

}  // namespace coach
