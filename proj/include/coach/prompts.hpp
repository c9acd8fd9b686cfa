#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coach/error.hpp"
#include "coach/model_registry.hpp"
#include "coach/session.hpp"

namespace coach {

enum class PromptTask {
  context_tagging,
  question_personalization,
  risk_diagnosis,
  reflection_questions,
  strategy_suggestion,
  agenda_synthesis,
};

inline constexpr std::array<PromptTask, 6> kAllTasks = {
    PromptTask::context_tagging,      PromptTask::question_personalization, PromptTask::risk_diagnosis,
    PromptTask::reflection_questions, PromptTask::strategy_suggestion,      PromptTask::agenda_synthesis,
};

// Wire names: ContextTagging, QuestionPersonalization, ...
std::string_view to_string(PromptTask t);
PromptTask prompt_task_from_string(std::string_view s);

// --- schema descriptors ---------------------------------------------------

enum class ValueKind { string, integer, string_list, integer_list, object_list };

struct FieldSpec {
  std::string name;
  ValueKind kind = ValueKind::string;
  bool nonempty = false;            // strings: non-blank; lists: at least one element
  std::vector<FieldSpec> item_fields;  // object_list only
};

// Expected shape of a task's structured output. Top level is either an object
// with `fields`, or a list whose items are objects with `fields`.
struct SchemaDescriptor {
  enum class Shape { object, list };
  std::string name;
  Shape shape = Shape::object;
  std::vector<FieldSpec> fields;
};

const SchemaDescriptor& schema_for(PromptTask t);

// Strict check: missing fields, wrong kinds and unknown fields are all reported.
std::vector<FieldError> validate_against(const json& value, const SchemaDescriptor& schema);

// Human-readable description embedded in prompts.
std::string describe(const SchemaDescriptor& schema);

// --- templates ------------------------------------------------------------

struct PromptTemplate {
  PromptTask task;
  std::string name;
  std::string source;  // raw resource text
  std::string hash;    // sha256 of source
  std::string system;
  std::string knowledge;
  std::string context;
  std::string user;
};

// Parses a sentinel-sectioned template resource. Throws ValidationError when
// a section is missing.
PromptTemplate parse_template(PromptTask task, std::string_view source);

// The checked-in templates, compiled into the library.
const PromptTemplate& template_for(PromptTask t);

// --- payloads -------------------------------------------------------------

struct TaggingPayload {
  std::string area_id;
  std::vector<ChatMessage> segment;
};
struct PersonalizationPayload {
  std::string area_id;
};
struct DiagnosisPayload {
  // Novice area answers, included verbatim next to the extracted context.
  std::vector<ChatMessage> answers;
};
struct ReflectionPayload {
  Diagnosis diagnosis;
};
struct StrategyPayload {
  Diagnosis diagnosis;
  std::optional<MentorGoals> goals;
  std::optional<Reflection> reflection;
};
struct AgendaPayload {
  struct Item {
    std::string risk_id;
    std::string reflection;
  };
  std::vector<Item> items;
  std::string notes;
};

using PromptPayload = std::variant<TaggingPayload, PersonalizationPayload, DiagnosisPayload, ReflectionPayload,
                                   StrategyPayload, AgendaPayload>;

struct RenderedPrompt {
  PromptTask task = PromptTask::context_tagging;
  std::string system_instructions;
  std::string knowledge_block;
  std::string context_block;
  std::string user_block;
  SchemaDescriptor schema;
  std::string template_hash;

  // KNOWLEDGE / CONTEXT / TASK sections joined under their sentinel headers.
  std::string text() const;
  // sha256 over the system instructions and text().
  std::string hash() const;
};

inline constexpr std::string_view kKnowledgeHeader = "=== KNOWLEDGE ===";
inline constexpr std::string_view kContextHeader = "=== CONTEXT ===";
inline constexpr std::string_view kTaskHeader = "=== TASK ===";

// Context keys the tagging step may emit for an area.
std::vector<std::string> context_keys_for(std::string_view area_id);

// Context entries as "Key: value [ref:N]" lines grouped by area in area order.
std::string render_context(const std::vector<ContextEntry>& context, const ProjectModel& project);

// Pure and deterministic. Disabled risks never reach the knowledge block.
// Throws Error(payload_mismatch) when the payload does not belong to `task`.
RenderedPrompt render(PromptTask task, const CoachingModel& knowledge, const std::vector<ContextEntry>& context,
                      const PromptPayload& payload);

}  // namespace coach
