#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "coach/gateway.hpp"
#include "coach/prompts.hpp"
#include "coach/session.hpp"
#include "coach/structured.hpp"

namespace coach {

struct StrategySuggestion {
  std::string risk_id;
  std::vector<std::string> coaching_questions;
  std::vector<std::string> hypothesized_root_causes;
  std::string rationale;
  std::string template_hash;

  bool operator==(const StrategySuggestion&) const = default;
};

struct AgendaItem {
  std::string risk_id;
  std::string risk_name;
  std::string reflection_excerpt;
  std::string discussion_goal;

  bool operator==(const AgendaItem&) const = default;
};

struct AgendaDocument {
  std::string session_id;
  std::vector<AgendaItem> items;  // in the novice's selected order
  std::string notes;
  std::string template_hash;

  bool operator==(const AgendaDocument&) const = default;
};

json to_json(const StrategySuggestion& s);
json to_json(const AgendaDocument& a);
StrategySuggestion strategy_from_json(const json& doc);
AgendaDocument agenda_document_from_json(const json& doc);
std::string render_agenda_text(const AgendaDocument& a);

// Something the pipeline decided without failing, e.g. dropping a diagnosis
// that named a risk outside the enabled set.
struct PipelineEvent {
  std::string task;
  std::string kind;
  std::string detail;
};

struct PipelineOptions {
  int max_output_units = 1024;
  std::chrono::milliseconds deadline{60000};
};

// Longest reflection answer carried into an agenda item, in code points.
inline constexpr std::size_t kExcerptLength = 280;

// Fallback reflection question used when generation fails.
std::string fallback_reflection_question(const RiskDefinition& risk);

// The chained reasoning tasks. Stage k+1 consumes stage k's structured
// output; each call renders its three-layer prompt, sends it through the
// gateway and validates the answer strictly, with at most one corrective
// re-prompt per invocation.
class Pipeline {
 public:
  Pipeline(Gateway& gateway, Clock clock, PipelineOptions options = {});

  // Throws Error(extraction_empty) when no grounded statement survives.
  std::vector<ContextEntry> extract_context(const CoachingModel& model, const ProjectArea& area,
                                            const std::vector<ChatMessage>& segment,
                                            const std::vector<ContextEntry>& known = {});

  // Never fails: falls back to the area's example question.
  std::string personalize_question(const CoachingModel& model, const ProjectArea& area,
                                   const std::vector<ContextEntry>& context);

  // Only enabled risks are ever returned, in risk-model order. Context from
  // the Emotions area is withheld from the prompt.
  std::vector<Diagnosis> diagnose(const CoachingModel& model, const std::vector<ContextEntry>& context,
                                  const std::vector<ChatMessage>& answers = {});

  // One to three questions; never fails.
  std::vector<std::string> reflection_questions(const CoachingModel& model, const Diagnosis& diagnosis,
                                                const std::vector<ContextEntry>& context);

  // One suggestion per focus risk, or per diagnosed risk when no goals are set.
  std::vector<StrategySuggestion> suggest_strategies(const CoachingModel& model, const Session& session,
                                                     const std::optional<MentorGoals>& goals);

  AgendaDocument synthesize_agenda(const CoachingModel& model, const Session& session);

  std::vector<PipelineEvent> events() const;

 private:
  ParsedOutput call(PromptTask task, const RenderedPrompt& prompt);
  void note(PromptTask task, std::string kind, std::string detail);

  Gateway& gateway_;
  Clock clock_;
  PipelineOptions options_;
  mutable std::mutex mu_;
  std::vector<PipelineEvent> events_;
};

// Context entries fed to diagnosis: everything except the Emotions area.
std::vector<ContextEntry> diagnosis_context(const std::vector<ContextEntry>& context);

// True when every word of `value` occurs in `source` (case-insensitive).
bool grounded_in(std::string_view value, std::string_view source);

}  // namespace coach
