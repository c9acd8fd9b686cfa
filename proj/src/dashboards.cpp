#include "coach/dashboards.hpp"

#include <algorithm>

#include "coach/error.hpp"

namespace coach {

namespace {

std::vector<AreaSummary> summarize(const Session& s, const ProjectModel& project) {
  std::vector<AreaSummary> out;
  for (const auto& area : project.areas) {
    if (area.id == kEmotionsAreaId) continue;
    AreaSummary a{area.id, area.name, {}, s.is_thin(area.id)};
    for (const auto& e : s.context)
      if (e.area_id == area.id) a.entries.emplace_back(e.key, e.value);
    out.push_back(std::move(a));
  }
  return out;
}

std::string risk_name(const RiskModel& m, const std::string& id) {
  const auto* r = m.find(id);
  return r ? r->name : id;
}

MentorRiskView mentor_view(const Session& s, const RiskModel& m, const Diagnosis& d) {
  MentorRiskView v{d.risk_id, risk_name(m, d.risk_id), d.rationale, d.evidence, {}, std::nullopt};
  if (const auto* r = s.reflection_for(d.risk_id)) {
    v.reflection_question = r->question;
    v.reflection_answer = r->answer;
  }
  return v;
}

json summary_json(const std::vector<AreaSummary>& summary) {
  json out = json::array();
  for (const auto& a : summary) {
    json entries = json::array();
    for (const auto& [k, v] : a.entries) entries.push_back({{"key", k}, {"value", v}});
    out.push_back({{"area_id", a.area_id}, {"area_name", a.area_name}, {"entries", entries}, {"thin_context", a.thin}});
  }
  return out;
}

json named_json(const std::vector<NamedRisk>& risks) {
  json out = json::array();
  for (const auto& r : risks) out.push_back({{"risk_id", r.risk_id}, {"name", r.name}});
  return out;
}

json mentor_risks_json(const std::vector<MentorRiskView>& risks) {
  json out = json::array();
  for (const auto& r : risks) {
    out.push_back({{"risk_id", r.risk_id},
                   {"name", r.name},
                   {"rationale", r.rationale},
                   {"evidence", r.evidence},
                   {"reflection_question", r.reflection_question},
                   {"reflection_answer", r.reflection_answer ? json(*r.reflection_answer) : json()}});
  }
  return out;
}

std::string or_none(const std::string& s, const char* none = "(none)") { return s.empty() ? none : s; }

void export_summary(std::string& out, const std::vector<AreaSummary>& summary) {
  out += "\n== Project Summary ==\n";
  for (const auto& a : summary) {
    out += "[" + a.area_name + "]" + (a.thin ? " (thin context)" : "") + "\n";
    if (a.entries.empty()) out += "  (no context captured)\n";
    for (const auto& [k, v] : a.entries) out += "  " + k + ": " + v + "\n";
  }
}

void export_thin(std::string& out, const std::vector<std::string>& flags) {
  out += "\n== Thin Context ==\n";
  if (flags.empty()) out += "(none)\n";
  for (const auto& f : flags) out += "- " + f + "\n";
}

void export_mentor_risks(std::string& out, const std::vector<MentorRiskView>& risks) {
  if (risks.empty()) out += "(none)\n";
  for (std::size_t i = 0; i < risks.size(); ++i) {
    const auto& r = risks[i];
    out += std::to_string(i + 1) + ". " + r.name + " (" + r.risk_id + ")\n";
    out += "   Rationale: " + r.rationale + "\n";
    std::string refs;
    for (auto seq : r.evidence) refs += (refs.empty() ? "" : ", ") + std::string("[ref:") + std::to_string(seq) + "]";
    out += "   Evidence: " + or_none(refs) + "\n";
    out += "   Reflection question: " + or_none(r.reflection_question) + "\n";
    out += "   Reflection answer: " + (r.reflection_answer ? *r.reflection_answer : std::string("(unanswered)")) + "\n";
  }
}

void export_notes(std::string& out, const std::string& notes) {
  out += "\n== Notes ==\n" + or_none(notes, "(empty)") + "\n";
}

}  // namespace

std::string transcript_ref(const std::string& session_id) { return "/v1/sessions/" + session_id + "#transcript"; }

NoviceDashboard build_novice_dashboard(const Session& s, const CoachingModel& model) {
  if (s.phase < Phase::reflecting) {
    throw Error(Errc::wrong_phase, "novice dashboard needs a session in Reflecting or later; session is " +
                                       std::string(to_string(s.phase)));
  }
  NoviceDashboard d;
  d.session_id = s.id;
  d.project_model_version = s.project_model_version;
  d.risk_model_version = s.risk_model_version;
  d.phase = std::string(to_string(s.phase));
  d.project_summary = summarize(s, model.project);
  d.thin_context_flags = s.thin_context;

  for (const auto& diag : s.diagnoses) {
    RiskReport r;
    r.risk_id = diag.risk_id;
    const auto* def = model.risk.find(diag.risk_id);
    r.name = def ? def->name : diag.risk_id;
    r.explanation = def ? def->description + " Why this came up: " + diag.rationale : diag.rationale;
    if (const auto* refl = s.reflection_for(diag.risk_id)) {
      r.reflection_question = refl->question;
      r.followups = refl->followups;
      r.reflection_answer = refl->answer;
    }
    d.risk_reports.push_back(std::move(r));
  }
  for (const auto* risk : model.risk.enabled_risks()) {
    if (!s.has_diagnosis(risk->id)) d.other_model_risks.push_back({risk->id, risk->name});
  }
  if (s.agenda) {
    std::vector<NamedRisk> selected;
    for (const auto& id : s.agenda->selected) selected.push_back({id, risk_name(model.risk, id)});
    d.agenda = std::move(selected);
    d.notes = s.agenda->notes;
  }
  return d;
}

MentorDashboard build_mentor_dashboard(const Session& s, const CoachingModel& model,
                                       const std::optional<MentorGoals>& goals,
                                       const std::vector<StrategySuggestion>& strategies) {
  if (s.phase != Phase::complete || !s.agenda) {
    throw Error(Errc::wrong_phase, "mentor dashboard needs a Complete session; session is " +
                                       std::string(to_string(s.phase)));
  }
  MentorDashboard d;
  d.session_id = s.id;
  d.novice_id = s.novice_id;
  d.project_model_version = s.project_model_version;
  d.risk_model_version = s.risk_model_version;
  d.project_summary = summarize(s, model.project);
  for (const auto& id : s.agenda->selected) {
    auto it = std::find_if(s.diagnoses.begin(), s.diagnoses.end(), [&](const Diagnosis& x) { return x.risk_id == id; });
    if (it != s.diagnoses.end()) d.selected_risks.push_back(mentor_view(s, model.risk, *it));
  }
  for (const auto& diag : s.diagnoses) {
    if (s.agenda->omitted.count(diag.risk_id)) d.omitted_risks.push_back(mentor_view(s, model.risk, diag));
  }
  for (const auto& m : area_segment(s, kEmotionsAreaId)) {
    if (!d.emotions_excerpt.empty()) d.emotions_excerpt += "\n";
    d.emotions_excerpt += m.text;
  }
  d.transcript_ref = transcript_ref(s.id);
  d.thin_context_flags = s.thin_context;
  d.strategies = strategies;
  d.mentor_goals = goals;
  d.notes = s.agenda->notes;
  return d;
}

json to_json(const NoviceDashboard& d) {
  json reports = json::array();
  for (const auto& r : d.risk_reports) {
    reports.push_back({{"risk_id", r.risk_id},
                       {"name", r.name},
                       {"explanation", r.explanation},
                       {"reflection_question", r.reflection_question},
                       {"followups", r.followups},
                       {"reflection_answer", r.reflection_answer ? json(*r.reflection_answer) : json()}});
  }
  return json{{"schema_version", 1},
              {"role", "novice"},
              {"session_id", d.session_id},
              {"project_model_version", d.project_model_version},
              {"risk_model_version", d.risk_model_version},
              {"phase", d.phase},
              {"project_summary", summary_json(d.project_summary)},
              {"risk_reports", reports},
              {"other_model_risks", named_json(d.other_model_risks)},
              {"agenda", d.agenda ? named_json(*d.agenda) : json()},
              {"notes", d.notes},
              {"thin_context_flags", d.thin_context_flags}};
}

json to_json(const MentorDashboard& d) {
  json strategies = json::array();
  for (const auto& s : d.strategies) strategies.push_back(to_json(s));
  return json{{"schema_version", 1},
              {"role", "mentor"},
              {"session_id", d.session_id},
              {"novice_id", d.novice_id},
              {"project_model_version", d.project_model_version},
              {"risk_model_version", d.risk_model_version},
              {"project_summary", summary_json(d.project_summary)},
              {"selected_risks", mentor_risks_json(d.selected_risks)},
              {"omitted_risks", mentor_risks_json(d.omitted_risks)},
              {"emotions_excerpt", d.emotions_excerpt},
              {"transcript_ref", d.transcript_ref},
              {"thin_context_flags", d.thin_context_flags},
              {"strategies", strategies},
              {"mentor_goals", d.mentor_goals ? to_json(*d.mentor_goals) : json()},
              {"notes", d.notes}};
}

std::string render_export(const NoviceDashboard& d) {
  std::string out = "NOVICE DASHBOARD\nSession: " + d.session_id + "\nPhase: " + d.phase +
                    "\nModel versions: project " + std::to_string(d.project_model_version) + ", risk " +
                    std::to_string(d.risk_model_version) + "\n";
  export_summary(out, d.project_summary);
  export_thin(out, d.thin_context_flags);

  out += "\n== Risk Reports ==\n";
  if (d.risk_reports.empty()) out += "(none)\n";
  for (std::size_t i = 0; i < d.risk_reports.size(); ++i) {
    const auto& r = d.risk_reports[i];
    out += std::to_string(i + 1) + ". " + r.name + " (" + r.risk_id + ")\n";
    out += "   " + r.explanation + "\n";
    out += "   Reflection question: " + or_none(r.reflection_question) + "\n";
    for (const auto& f : r.followups) out += "   Also consider: " + f + "\n";
    out += "   Your answer: " + (r.reflection_answer ? *r.reflection_answer : std::string("(unanswered)")) + "\n";
  }

  out += "\n== Other Risks in the Model ==\n";
  if (d.other_model_risks.empty()) out += "(none)\n";
  for (const auto& r : d.other_model_risks) out += "- " + r.name + "\n";

  out += "\n== Agenda ==\n";
  if (!d.agenda) {
    out += "(not set)\n";
  } else if (d.agenda->empty()) {
    out += "(no risks selected)\n";
  } else {
    for (std::size_t i = 0; i < d.agenda->size(); ++i) out += std::to_string(i + 1) + ". " + (*d.agenda)[i].name + "\n";
  }
  export_notes(out, d.notes);
  return out;
}

std::string render_export(const MentorDashboard& d) {
  std::string out = "MENTOR DASHBOARD\nSession: " + d.session_id + "\nNovice: " + d.novice_id +
                    "\nModel versions: project " + std::to_string(d.project_model_version) + ", risk " +
                    std::to_string(d.risk_model_version) + "\n";
  export_thin(out, d.thin_context_flags);
  export_summary(out, d.project_summary);

  out += "\n== Selected Risks ==\n";
  export_mentor_risks(out, d.selected_risks);
  out += "\n== Unselected Risks ==\n";
  export_mentor_risks(out, d.omitted_risks);

  out += "\n== Emotions ==\n" + or_none(d.emotions_excerpt) + "\n";

  out += "\n== Mentor Goals ==\n";
  if (!d.mentor_goals) {
    out += "(none set)\n";
  } else {
    std::string focus;
    for (const auto& id : d.mentor_goals->focus_risk_ids) focus += (focus.empty() ? "" : ", ") + id;
    out += "Focus risks: " + or_none(focus) + "\n";
    out += "Desired outcomes: " + or_none(d.mentor_goals->desired_outcomes) + "\n";
  }

  out += "\n== Strategies ==\n";
  if (d.strategies.empty()) out += "(none)\n";
  for (const auto& s : d.strategies) {
    out += "[" + s.risk_id + "]\n  Coaching questions:\n";
    for (const auto& q : s.coaching_questions) out += "  - " + q + "\n";
    out += "  Hypothesized root causes:\n";
    if (s.hypothesized_root_causes.empty()) out += "  (none)\n";
    for (const auto& c : s.hypothesized_root_causes) out += "  - " + c + "\n";
    out += "  Rationale: " + or_none(s.rationale) + "\n";
  }
  export_notes(out, d.notes);
  out += "\n== Transcript ==\n" + d.transcript_ref + "\n";
  return out;
}

}  // namespace coach
