#include "coach/session.hpp"

#include <algorithm>

#include "coach/error.hpp"

namespace coach {

namespace {

constexpr std::int64_t kSessionSchemaVersion = 1;
constexpr const char* kGreeting =
    "Hi! Before your next coaching meeting, let's walk through where your project stands.";

Error wrong_phase(const Session& s, std::string_view what) {
  return Error(Errc::wrong_phase,
               std::string(what) + " is not allowed in phase " + std::string(to_string(s.phase)));
}

const ChatMessage* find_message(const Session& s, std::int64_t seq) {
  for (const auto& m : s.transcript)
    if (m.seq == seq) return &m;
  return nullptr;
}

std::size_t area_order(const ProjectModel& project, std::string_view area_id) {
  const auto* a = project.find(area_id);
  return a ? static_cast<std::size_t>(a->order) : project.areas.size();
}

// Diagnoses are validated atomically: all are accepted or none.
std::vector<Diagnosis> checked_diagnoses(const Session& s, const RiskModel& risk,
                                         const std::vector<Diagnosis>& diagnoses) {
  std::vector<Diagnosis> out;
  for (const auto& d : diagnoses) {
    if (!risk.is_enabled(d.risk_id)) {
      throw Error(Errc::unknown_risk, "risk \"" + d.risk_id + "\" is not enabled in risk model v" +
                                          std::to_string(risk.version));
    }
    if (trim(d.rationale).empty()) throw ValidationError(std::vector<FieldError>{{"diagnoses." + d.risk_id + ".rationale", "must be nonempty"}});
    if (d.evidence.empty()) throw ValidationError(std::vector<FieldError>{{"diagnoses." + d.risk_id + ".evidence", "must be nonempty"}});
    for (auto seq : d.evidence) {
      const auto* m = find_message(s, seq);
      if (!m || m->speaker != Speaker::novice) {
        throw Error(Errc::bad_source_ref,
                    "diagnosis " + d.risk_id + " cites seq " + std::to_string(seq) + " which is not a novice message");
      }
    }
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Diagnosis& x) { return x.risk_id == d.risk_id; });
    if (!seen) out.push_back(d);
  }
  std::stable_sort(out.begin(), out.end(), [&](const Diagnosis& a, const Diagnosis& b) {
    return risk.position(a.risk_id) < risk.position(b.risk_id);
  });
  return out;
}

bool all_reflections_answered(const Session& s) {
  return std::all_of(s.diagnoses.begin(), s.diagnoses.end(), [&](const Diagnosis& d) {
    const auto* r = s.reflection_for(d.risk_id);
    return r && r->answer.has_value();
  });
}

}  // namespace

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::eliciting: return "Eliciting";
    case Phase::diagnosing: return "Diagnosing";
    case Phase::reflecting: return "Reflecting";
    case Phase::prioritizing: return "Prioritizing";
    case Phase::complete: return "Complete";
  }
  return "Unknown";
}

Phase phase_from_string(std::string_view s) {
  for (auto p : {Phase::eliciting, Phase::diagnosing, Phase::reflecting, Phase::prioritizing, Phase::complete})
    if (to_string(p) == s) return p;
  throw ValidationError(std::vector<FieldError>{{"phase", "unknown phase " + std::string(s)}});
}

bool Session::has_diagnosis(std::string_view risk_id) const {
  return std::any_of(diagnoses.begin(), diagnoses.end(), [&](const Diagnosis& d) { return d.risk_id == risk_id; });
}

const Reflection* Session::reflection_for(std::string_view risk_id) const {
  for (const auto& r : reflections)
    if (r.risk_id == risk_id) return &r;
  return nullptr;
}

bool Session::is_thin(std::string_view area_id) const {
  return std::find(thin_context.begin(), thin_context.end(), area_id) != thin_context.end();
}

std::string describe(const NextAction& a) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AskAreaQuestion>) return "AskAreaQuestion(" + v.area_id + ")";
        if constexpr (std::is_same_v<T, AskReflectionQuestion>) return "AskReflectionQuestion(" + v.risk_id + ")";
        if constexpr (std::is_same_v<T, RunDiagnosis>) return "RunDiagnosis";
        if constexpr (std::is_same_v<T, AwaitPrioritization>) return "AwaitPrioritization";
        if constexpr (std::is_same_v<T, Done>) return "Done";
      },
      a);
}

std::optional<ChatMessage> pending_question(const Session& s) {
  if (s.transcript.empty()) return std::nullopt;
  const auto& last = s.transcript.back();
  if (last.speaker == Speaker::system && (last.area_id || last.risk_id)) return last;
  return std::nullopt;
}

std::vector<ChatMessage> area_segment(const Session& s, std::string_view area_id) {
  std::vector<ChatMessage> out;
  for (const auto& m : s.transcript)
    if (m.speaker == Speaker::novice && m.area_id && *m.area_id == area_id) out.push_back(m);
  return out;
}

bool area_settled(const Session& s, const ProjectArea& area) {
  if (s.is_thin(area.id)) return true;
  for (const auto& m : area_segment(s, area.id)) {
    if (!area.required || utf8_length(m.text) >= kMinAnswerLength) return true;
  }
  return false;
}

bool all_required_answered(const Session& s, const ProjectModel& project) {
  return std::all_of(project.areas.begin(), project.areas.end(),
                     [&](const ProjectArea& a) { return !a.required || area_settled(s, a); });
}

NextAction next_action(const Session& s, const ProjectModel& project) {
  switch (s.phase) {
    case Phase::eliciting: {
      if (auto q = pending_question(s); q && q->area_id) return AskAreaQuestion{*q->area_id};
      for (const auto& a : project.areas)
        if (!area_settled(s, a)) return AskAreaQuestion{a.id};
      return RunDiagnosis{};
    }
    case Phase::diagnosing:
      return RunDiagnosis{};
    case Phase::reflecting:
      for (const auto& d : s.diagnoses) {
        const auto* r = s.reflection_for(d.risk_id);
        if (!r || !r->answer) return AskReflectionQuestion{d.risk_id};
      }
      return AwaitPrioritization{};
    case Phase::prioritizing:
      return AwaitPrioritization{};
    case Phase::complete:
      return Done{};
  }
  return Done{};
}

Session SessionEngine::touched(const Session& s) const {
  Session next = s;
  next.updated_at = clock_();
  return next;
}

ChatMessage& SessionEngine::push(Session& s, Speaker who, std::string text) const {
  ChatMessage m;
  m.seq = s.transcript.empty() ? 0 : s.transcript.back().seq + 1;
  m.speaker = who;
  m.text = std::move(text);
  s.transcript.push_back(std::move(m));
  return s.transcript.back();
}

Session SessionEngine::create_session(const std::string& novice_id, const ProjectModel& project,
                                      const RiskModel& risk) const {
  if (trim(novice_id).empty()) throw ValidationError(std::vector<FieldError>{{"novice_id", "must be nonempty"}});
  if (project.areas.empty()) throw ValidationError(std::vector<FieldError>{{"project_model.areas", "at least one area is required"}});
  Session s;
  s.id = ids_();
  s.novice_id = novice_id;
  s.project_model_version = project.version;
  s.risk_model_version = risk.version;
  s.created_at = clock_();
  s.updated_at = s.created_at;
  push(s, Speaker::system, kGreeting);
  const auto& first = project.areas.front();
  push(s, Speaker::system, first.example_question).area_id = first.id;
  return s;
}

Session SessionEngine::ask_area_question(const Session& s, const ProjectModel& project,
                                         const std::string& text) const {
  if (s.phase != Phase::eliciting) throw wrong_phase(s, "asking an area question");
  if (pending_question(s)) throw wrong_phase(s, "asking while a question is pending");
  auto action = next_action(s, project);
  const auto* ask = std::get_if<AskAreaQuestion>(&action);
  if (!ask) throw wrong_phase(s, "asking an area question");
  if (trim(text).empty()) throw Error(Errc::empty_message, "question text is empty");
  Session next = touched(s);
  push(next, Speaker::system, trim(text)).area_id = ask->area_id;
  return next;
}

Session SessionEngine::ask_reflection(const Session& s, const std::vector<std::string>& questions) const {
  if (s.phase != Phase::reflecting) throw wrong_phase(s, "asking a reflection question");
  if (pending_question(s)) throw wrong_phase(s, "asking while a question is pending");
  std::optional<std::string> target;
  for (const auto& d : s.diagnoses) {
    const auto* r = s.reflection_for(d.risk_id);
    if (!r || !r->answer) {
      target = d.risk_id;
      break;
    }
  }
  if (!target) throw wrong_phase(s, "asking a reflection question with nothing left to reflect on");
  std::vector<std::string> cleaned;
  for (const auto& q : questions)
    if (!trim(q).empty()) cleaned.push_back(trim(q));
  if (cleaned.empty()) throw Error(Errc::empty_message, "reflection question is empty");

  Session next = touched(s);
  Reflection r;
  r.risk_id = *target;
  r.question = cleaned.front();
  r.followups.assign(cleaned.begin() + 1, cleaned.end());
  r.asked_at = next.updated_at;
  std::erase_if(next.reflections, [&](const Reflection& x) { return x.risk_id == *target; });
  next.reflections.push_back(r);
  push(next, Speaker::system, r.question).risk_id = *target;
  return next;
}

Session SessionEngine::record_novice_message(const Session& s, const ProjectModel& project,
                                             const std::string& text) const {
  if (s.phase != Phase::eliciting && s.phase != Phase::reflecting) throw wrong_phase(s, "recording a message");
  const std::string answer = trim(text);
  if (answer.empty()) throw Error(Errc::empty_message, "message is empty");
  auto pending = pending_question(s);
  if (!pending) throw wrong_phase(s, "recording a message with no question pending");

  Session next = touched(s);
  if (s.phase == Phase::eliciting) {
    if (!pending->area_id) throw wrong_phase(s, "recording an area answer");
    const auto* area = project.find(*pending->area_id);
    if (!area) throw Error(Errc::unknown_area, "unknown area \"" + *pending->area_id + "\"");
    const auto prior = area_segment(s, area->id).size();
    push(next, Speaker::novice, answer).area_id = area->id;

    if (area->required && utf8_length(answer) < kMinAnswerLength) {
      if (prior == 0) {
        push(next, Speaker::system, "Could you say a bit more? " + area->example_question).area_id = area->id;
      } else if (!next.is_thin(area->id)) {
        next = mark_thin_context(next, project, area->id);
      }
    }
    const bool done = std::all_of(project.areas.begin(), project.areas.end(),
                                  [&](const ProjectArea& a) { return area_settled(next, a); });
    if (done) next.phase = Phase::diagnosing;
    return next;
  }

  if (!pending->risk_id || !s.has_diagnosis(*pending->risk_id)) throw wrong_phase(s, "recording a reflection");
  push(next, Speaker::novice, answer).risk_id = *pending->risk_id;
  for (auto& r : next.reflections)
    if (r.risk_id == *pending->risk_id) r.answer = answer;
  if (all_reflections_answered(next)) next.phase = Phase::prioritizing;
  return next;
}

Session SessionEngine::attach_context(const Session& s, const ProjectModel& project,
                                      const std::vector<ContextEntry>& entries) const {
  if (s.phase != Phase::eliciting && s.phase != Phase::diagnosing) throw wrong_phase(s, "attaching context");
  for (const auto& e : entries) {
    if (!project.find(e.area_id)) throw Error(Errc::unknown_area, "unknown area \"" + e.area_id + "\"");
    if (trim(e.key).empty() || trim(e.value).empty()) {
      throw ValidationError(std::vector<FieldError>{{"context." + e.area_id, "key and value must be nonempty"}});
    }
    const auto* m = find_message(s, e.source_seq);
    if (!m || m->speaker != Speaker::novice || m->area_id != e.area_id) {
      throw Error(Errc::bad_source_ref, "context entry " + e.area_id + "/" + e.key + " cites seq " +
                                            std::to_string(e.source_seq) + " which is not a novice answer for the area");
    }
  }
  Session next = touched(s);
  for (const auto& e : entries) {
    auto it = std::find_if(next.context.begin(), next.context.end(),
                           [&](const ContextEntry& x) { return x.area_id == e.area_id && x.key == e.key; });
    if (it != next.context.end()) {
      *it = e;
    } else {
      next.context.push_back(e);
    }
  }
  return next;
}

Session SessionEngine::mark_thin_context(const Session& s, const ProjectModel& project,
                                         const std::string& area_id) const {
  if (!project.find(area_id)) throw Error(Errc::unknown_area, "unknown area \"" + area_id + "\"");
  Session next = touched(s);
  if (!next.is_thin(area_id)) {
    next.thin_context.push_back(area_id);
    std::stable_sort(next.thin_context.begin(), next.thin_context.end(), [&](const auto& a, const auto& b) {
      return area_order(project, a) < area_order(project, b);
    });
  }
  return next;
}

Session SessionEngine::attach_diagnoses(const Session& s, const ProjectModel& project, const RiskModel& risk,
                                        const std::vector<Diagnosis>& diagnoses) const {
  const bool ready = s.phase == Phase::diagnosing || (s.phase == Phase::eliciting && all_required_answered(s, project));
  if (!ready) throw wrong_phase(s, "attaching diagnoses");
  if (risk.version != s.risk_model_version) {
    throw ValidationError(std::vector<FieldError>{{"risk_model_version", "session is pinned to v" + std::to_string(s.risk_model_version) +
                                                      ", got v" + std::to_string(risk.version)}});
  }
  const bool any_answer = std::any_of(s.transcript.begin(), s.transcript.end(),
                                      [](const ChatMessage& m) { return m.speaker == Speaker::novice; });
  if (!any_answer) throw Error(Errc::no_context, "no project areas have been answered");

  auto accepted = checked_diagnoses(s, risk, diagnoses);
  Session next = touched(s);
  next.diagnoses = std::move(accepted);
  next.phase = next.diagnoses.empty() ? Phase::prioritizing : Phase::reflecting;
  return next;
}

Session SessionEngine::rediagnose(const Session& s, const RiskModel& risk,
                                  const std::vector<Diagnosis>& diagnoses) const {
  if (s.phase != Phase::diagnosing && s.phase != Phase::reflecting && s.phase != Phase::prioritizing) {
    throw wrong_phase(s, "re-diagnosing");
  }
  if (pending_question(s) && pending_question(s)->risk_id) throw wrong_phase(s, "re-diagnosing mid-reflection");
  auto accepted = checked_diagnoses(s, risk, diagnoses);
  Session next = touched(s);
  next.risk_model_version = risk.version;
  next.diagnoses = std::move(accepted);
  std::erase_if(next.reflections, [&](const Reflection& r) { return !next.has_diagnosis(r.risk_id); });
  if (next.phase == Phase::diagnosing) {
    next.phase = next.diagnoses.empty() ? Phase::prioritizing : Phase::reflecting;
  } else if (next.phase == Phase::reflecting && all_reflections_answered(next)) {
    next.phase = Phase::prioritizing;
  }
  return next;
}

Session SessionEngine::set_agenda(const Session& s, const std::vector<std::string>& selected,
                                  const std::string& notes) const {
  if (s.phase != Phase::prioritizing) throw wrong_phase(s, "setting the agenda");
  std::set<std::string> seen;
  for (const auto& id : selected) {
    if (!s.has_diagnosis(id)) throw Error(Errc::unknown_risk, "risk \"" + id + "\" was not diagnosed");
    if (!seen.insert(id).second) throw Error(Errc::duplicate_selection, "risk \"" + id + "\" selected twice");
  }
  AgendaSelection agenda;
  agenda.selected = selected;
  for (const auto& d : s.diagnoses)
    if (!seen.count(d.risk_id)) agenda.omitted.insert(d.risk_id);
  agenda.notes = notes;

  Session next = touched(s);
  next.agenda = std::move(agenda);
  next.phase = Phase::complete;
  return next;
}

// --- serialization -------------------------------------------------------

namespace {

json optional_string(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
T field(const json& doc, const char* name) {
  try {
    return doc.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::vector<FieldError>{{name, e.what()}});
  }
}

std::optional<std::string> optional_field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::vector<FieldError>{{name, "expected string or null"}});
  return it->get<std::string>();
}

}  // namespace

json to_json(const ChatMessage& m) {
  return json{{"seq", m.seq},
              {"speaker", m.speaker == Speaker::system ? "system" : "novice"},
              {"text", m.text},
              {"area_id", optional_string(m.area_id)},
              {"risk_id", optional_string(m.risk_id)}};
}

json to_json(const ContextEntry& e) {
  return json{{"area_id", e.area_id}, {"key", e.key}, {"value", e.value}, {"source_seq", e.source_seq}};
}

json to_json(const Diagnosis& d) {
  return json{{"risk_id", d.risk_id},
              {"rationale", d.rationale},
              {"evidence", d.evidence},
              {"diagnosed_at", format_timestamp(d.diagnosed_at)},
              {"template_hash", d.template_hash}};
}

json to_json(const Reflection& r) {
  return json{{"risk_id", r.risk_id},
              {"question", r.question},
              {"followups", r.followups},
              {"answer", optional_string(r.answer)},
              {"asked_at", format_timestamp(r.asked_at)}};
}

json to_json(const AgendaSelection& a) {
  return json{{"selected", a.selected}, {"omitted", a.omitted}, {"notes", a.notes}};
}

json to_json(const Session& s) {
  json transcript = json::array(), context = json::array(), diagnoses = json::array(), reflections = json::array();
  for (const auto& m : s.transcript) transcript.push_back(to_json(m));
  for (const auto& e : s.context) context.push_back(to_json(e));
  for (const auto& d : s.diagnoses) diagnoses.push_back(to_json(d));
  for (const auto& r : s.reflections) reflections.push_back(to_json(r));
  return json{{"schema_version", kSessionSchemaVersion},
              {"id", s.id},
              {"novice_id", s.novice_id},
              {"project_model_version", s.project_model_version},
              {"risk_model_version", s.risk_model_version},
              {"phase", to_string(s.phase)},
              {"transcript", std::move(transcript)},
              {"context", std::move(context)},
              {"diagnoses", std::move(diagnoses)},
              {"reflections", std::move(reflections)},
              {"agenda", s.agenda ? to_json(*s.agenda) : json(nullptr)},
              {"thin_context", s.thin_context},
              {"created_at", format_timestamp(s.created_at)},
              {"updated_at", format_timestamp(s.updated_at)}};
}

json to_json(const MentorGoals& g) {
  return json{{"schema_version", 1},
              {"session_id", g.session_id},
              {"focus_risk_ids", g.focus_risk_ids},
              {"desired_outcomes", g.desired_outcomes},
              {"set_at", format_timestamp(g.set_at)}};
}

MentorGoals mentor_goals_from_json(const json& doc) {
  MentorGoals g;
  g.session_id = field<std::string>(doc, "session_id");
  g.focus_risk_ids = field<std::vector<std::string>>(doc, "focus_risk_ids");
  g.desired_outcomes = field<std::string>(doc, "desired_outcomes");
  g.set_at = parse_timestamp(field<std::string>(doc, "set_at"));
  return g;
}

void check_goals(const Session& s, const MentorGoals& g) {
  std::set<std::string> seen;
  for (const auto& id : g.focus_risk_ids) {
    if (!s.has_diagnosis(id)) throw Error(Errc::unknown_risk, "focus risk \"" + id + "\" was not diagnosed");
    if (!seen.insert(id).second) throw Error(Errc::duplicate_selection, "focus risk \"" + id + "\" listed twice");
  }
}

ContextEntry context_entry_from_json(const json& doc) {
  return {field<std::string>(doc, "area_id"), field<std::string>(doc, "key"), field<std::string>(doc, "value"),
          field<std::int64_t>(doc, "source_seq")};
}

Diagnosis diagnosis_from_json(const json& doc) {
  Diagnosis d;
  d.risk_id = field<std::string>(doc, "risk_id");
  d.rationale = field<std::string>(doc, "rationale");
  d.evidence = field<std::vector<std::int64_t>>(doc, "evidence");
  d.diagnosed_at = parse_timestamp(field<std::string>(doc, "diagnosed_at"));
  d.template_hash = doc.value("template_hash", "");
  return d;
}

Session session_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError(std::vector<FieldError>{{"", "expected object"}});
  if (doc.value("schema_version", std::int64_t{1}) > kSessionSchemaVersion) {
    throw Error(Errc::migration_required, "session document is newer than this build understands");
  }
  Session s;
  s.id = field<std::string>(doc, "id");
  s.novice_id = field<std::string>(doc, "novice_id");
  s.project_model_version = field<std::int64_t>(doc, "project_model_version");
  s.risk_model_version = field<std::int64_t>(doc, "risk_model_version");
  s.phase = phase_from_string(field<std::string>(doc, "phase"));
  for (const auto& m : field<json>(doc, "transcript")) {
    ChatMessage msg;
    msg.seq = field<std::int64_t>(m, "seq");
    const auto speaker = field<std::string>(m, "speaker");
    if (speaker != "system" && speaker != "novice") throw ValidationError(std::vector<FieldError>{{"speaker", "unknown speaker " + speaker}});
    msg.speaker = speaker == "system" ? Speaker::system : Speaker::novice;
    msg.text = field<std::string>(m, "text");
    msg.area_id = optional_field(m, "area_id");
    msg.risk_id = optional_field(m, "risk_id");
    s.transcript.push_back(std::move(msg));
  }
  for (const auto& e : field<json>(doc, "context")) s.context.push_back(context_entry_from_json(e));
  for (const auto& d : field<json>(doc, "diagnoses")) s.diagnoses.push_back(diagnosis_from_json(d));
  for (const auto& r : field<json>(doc, "reflections")) {
    Reflection refl;
    refl.risk_id = field<std::string>(r, "risk_id");
    refl.question = field<std::string>(r, "question");
    refl.followups = r.value("followups", std::vector<std::string>{});
    refl.answer = optional_field(r, "answer");
    refl.asked_at = parse_timestamp(field<std::string>(r, "asked_at"));
    s.reflections.push_back(std::move(refl));
  }
  if (auto it = doc.find("agenda"); it != doc.end() && !it->is_null()) {
    AgendaSelection a;
    a.selected = field<std::vector<std::string>>(*it, "selected");
    for (const auto& id : field<std::vector<std::string>>(*it, "omitted")) a.omitted.insert(id);
    a.notes = field<std::string>(*it, "notes");
    s.agenda = std::move(a);
  }
  s.thin_context = field<std::vector<std::string>>(doc, "thin_context");
  s.created_at = parse_timestamp(field<std::string>(doc, "created_at"));
  s.updated_at = parse_timestamp(field<std::string>(doc, "updated_at"));
  return s;
}

}  // namespace coach
