#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coach/model_registry.hpp"
#include "coach/pipeline.hpp"
#include "coach/session.hpp"

namespace coach {

struct AreaSummary {
  std::string area_id;
  std::string area_name;
  std::vector<std::pair<std::string, std::string>> entries;  // key, value in capture order
  bool thin = false;

  bool operator==(const AreaSummary&) const = default;
};

struct RiskReport {
  std::string risk_id;
  std::string name;
  std::string explanation;
  std::string reflection_question;
  std::vector<std::string> followups;
  std::optional<std::string> reflection_answer;

  bool operator==(const RiskReport&) const = default;
};

struct NamedRisk {
  std::string risk_id;
  std::string name;

  bool operator==(const NamedRisk&) const = default;
};

struct NoviceDashboard {
  std::string session_id;
  std::int64_t project_model_version = 0;
  std::int64_t risk_model_version = 0;
  std::string phase;
  std::vector<AreaSummary> project_summary;
  std::vector<RiskReport> risk_reports;
  std::vector<NamedRisk> other_model_risks;  // enabled, undiagnosed, model order
  std::optional<std::vector<NamedRisk>> agenda;  // selected risks in priority order
  std::string notes;
  std::vector<std::string> thin_context_flags;

  bool operator==(const NoviceDashboard&) const = default;
};

struct MentorRiskView {
  std::string risk_id;
  std::string name;
  std::string rationale;
  std::vector<std::int64_t> evidence;
  std::string reflection_question;
  std::optional<std::string> reflection_answer;

  bool operator==(const MentorRiskView&) const = default;
};

struct MentorDashboard {
  std::string session_id;
  std::string novice_id;
  std::int64_t project_model_version = 0;
  std::int64_t risk_model_version = 0;
  std::vector<AreaSummary> project_summary;
  std::vector<MentorRiskView> selected_risks;  // novice priority order
  std::vector<MentorRiskView> omitted_risks;   // model order
  std::string emotions_excerpt;
  std::string transcript_ref;
  std::vector<std::string> thin_context_flags;
  std::vector<StrategySuggestion> strategies;
  std::optional<MentorGoals> mentor_goals;
  std::string notes;

  bool operator==(const MentorDashboard&) const = default;
};

// Pure. Needs a session that has reached Reflecting.
NoviceDashboard build_novice_dashboard(const Session& s, const CoachingModel& model);

// Pure. Needs a Complete session.
MentorDashboard build_mentor_dashboard(const Session& s, const CoachingModel& model,
                                       const std::optional<MentorGoals>& goals,
                                       const std::vector<StrategySuggestion>& strategies);

std::string transcript_ref(const std::string& session_id);

json to_json(const NoviceDashboard& d);
json to_json(const MentorDashboard& d);

// Plain-text exports with fixed section order. Empty sections are kept and
// marked so the reader can tell "nothing" from "missing".
std::string render_export(const NoviceDashboard& d);
std::string render_export(const MentorDashboard& d);

}  // namespace coach
