#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "coach/model_registry.hpp"
#include "coach/util.hpp"

namespace coach {

enum class Phase { eliciting, diagnosing, reflecting, prioritizing, complete };

std::string_view to_string(Phase p);
Phase phase_from_string(std::string_view s);

enum class Speaker { system, novice };

struct ChatMessage {
  std::int64_t seq = 0;
  Speaker speaker = Speaker::system;
  std::string text;
  std::optional<std::string> area_id;
  std::optional<std::string> risk_id;

  bool operator==(const ChatMessage&) const = default;
};

struct ContextEntry {
  std::string area_id;
  std::string key;
  std::string value;
  std::int64_t source_seq = 0;

  bool operator==(const ContextEntry&) const = default;
};

struct Diagnosis {
  std::string risk_id;
  std::string rationale;
  std::vector<std::int64_t> evidence;  // transcript seqs of the cited novice messages
  Timestamp diagnosed_at{};
  std::string template_hash;

  bool operator==(const Diagnosis&) const = default;
};

struct Reflection {
  std::string risk_id;
  std::string question;
  std::vector<std::string> followups;  // extra generated questions, shown on the novice dashboard
  std::optional<std::string> answer;
  Timestamp asked_at{};

  bool operator==(const Reflection&) const = default;
};

struct AgendaSelection {
  std::vector<std::string> selected;  // novice-given priority order
  std::set<std::string> omitted;
  std::string notes;

  bool operator==(const AgendaSelection&) const = default;
};

struct Session {
  std::string id;
  std::string novice_id;
  std::int64_t project_model_version = 0;
  std::int64_t risk_model_version = 0;
  Phase phase = Phase::eliciting;
  std::vector<ChatMessage> transcript;
  std::vector<ContextEntry> context;
  std::vector<Diagnosis> diagnoses;
  std::vector<Reflection> reflections;
  std::optional<AgendaSelection> agenda;
  std::vector<std::string> thin_context;  // area ids, in area order
  Timestamp created_at{};
  Timestamp updated_at{};

  bool operator==(const Session&) const = default;

  bool has_diagnosis(std::string_view risk_id) const;
  const Reflection* reflection_for(std::string_view risk_id) const;
  bool is_thin(std::string_view area_id) const;
};

// A mentor's pre-meeting focus for one session.
struct MentorGoals {
  std::string session_id;
  std::vector<std::string> focus_risk_ids;
  std::string desired_outcomes;
  Timestamp set_at{};

  bool operator==(const MentorGoals&) const = default;
};

// What the dialogue needs next.
struct AskAreaQuestion {
  std::string area_id;
  bool operator==(const AskAreaQuestion&) const = default;
};
struct AskReflectionQuestion {
  std::string risk_id;
  bool operator==(const AskReflectionQuestion&) const = default;
};
struct RunDiagnosis {
  bool operator==(const RunDiagnosis&) const = default;
};
struct AwaitPrioritization {
  bool operator==(const AwaitPrioritization&) const = default;
};
struct Done {
  bool operator==(const Done&) const = default;
};

using NextAction = std::variant<AskAreaQuestion, AskReflectionQuestion, RunDiagnosis, AwaitPrioritization, Done>;

std::string describe(const NextAction& a);

// Shortest answer to a required area that is accepted without a follow-up.
inline constexpr std::size_t kMinAnswerLength = 15;

// Drives one novice's engagement. Every operation returns a new Session and
// leaves its argument untouched, so a failed operation never changes state.
class SessionEngine {
 public:
  SessionEngine(Clock clock, IdSource ids) : clock_(std::move(clock)), ids_(std::move(ids)) {}

  // Greets the novice and asks the first area's example question.
  Session create_session(const std::string& novice_id, const ProjectModel& project, const RiskModel& risk) const;

  // Appends the question for the current target (from next_action) to the
  // transcript. Area questions and reflection questions only.
  Session ask_area_question(const Session& s, const ProjectModel& project, const std::string& text) const;
  Session ask_reflection(const Session& s, const std::vector<std::string>& questions) const;

  Session record_novice_message(const Session& s, const ProjectModel& project, const std::string& text) const;

  Session attach_context(const Session& s, const ProjectModel& project, const std::vector<ContextEntry>& entries) const;

  // Marks an area whose answers carried no usable context.
  Session mark_thin_context(const Session& s, const ProjectModel& project, const std::string& area_id) const;

  Session attach_diagnoses(const Session& s, const ProjectModel& project, const RiskModel& risk,
                           const std::vector<Diagnosis>& diagnoses) const;

  // Replaces the diagnoses with ones computed against a newer risk model.
  // Reflections on risks no longer diagnosed are dropped.
  Session rediagnose(const Session& s, const RiskModel& risk, const std::vector<Diagnosis>& diagnoses) const;

  Session set_agenda(const Session& s, const std::vector<std::string>& selected, const std::string& notes) const;

 private:
  Session touched(const Session& s) const;
  ChatMessage& push(Session& s, Speaker who, std::string text) const;

  Clock clock_;
  IdSource ids_;
};

NextAction next_action(const Session& s, const ProjectModel& project);

// The area or risk of the last system question if it has not been answered yet.
std::optional<ChatMessage> pending_question(const Session& s);

// An area is settled once it has an accepted answer or was marked thin.
bool area_settled(const Session& s, const ProjectArea& area);
bool all_required_answered(const Session& s, const ProjectModel& project);

// Novice messages attributed to an area, in transcript order.
std::vector<ChatMessage> area_segment(const Session& s, std::string_view area_id);

json to_json(const ChatMessage& m);
json to_json(const ContextEntry& e);
json to_json(const Diagnosis& d);
json to_json(const Reflection& r);
json to_json(const AgendaSelection& a);
json to_json(const Session& s);

json to_json(const MentorGoals& g);
MentorGoals mentor_goals_from_json(const json& doc);

// Throws unknown_risk unless every focus risk is diagnosed in `s`.
void check_goals(const Session& s, const MentorGoals& g);

Session session_from_json(const json& doc);
ContextEntry context_entry_from_json(const json& doc);
Diagnosis diagnosis_from_json(const json& doc);

}  // namespace coach
