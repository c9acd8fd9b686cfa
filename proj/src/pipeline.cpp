#include "coach/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "coach/error.hpp"

namespace coach {

namespace {

std::set<std::string> words(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.insert(std::exchange(cur, {}));
    }
  }
  if (!cur.empty()) out.insert(cur);
  return out;
}

// Harness errors mean the test fixture and the pipeline disagree; they are
// never swallowed by a fallback.
bool is_harness_error(const Error& e) {
  return e.code() == Errc::script_mismatch || e.code() == Errc::uncovered_task;
}

std::string excerpt(const std::string& text) {
  if (utf8_length(text) <= kExcerptLength) return text;
  std::size_t count = 0, i = 0;
  for (; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (count == kExcerptLength) break;
      ++count;
    }
  }
  return trim(text.substr(0, i)) + "…";
}

std::vector<std::string> string_list(const json& v) {
  std::vector<std::string> out;
  for (const auto& s : v) {
    auto t = trim(s.get<std::string>());
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

bool grounded_in(std::string_view value, std::string_view source) {
  const auto needed = words(value);
  if (needed.empty()) return false;
  const auto have = words(source);
  return std::all_of(needed.begin(), needed.end(), [&](const std::string& w) { return have.count(w) > 0; });
}

std::vector<ContextEntry> diagnosis_context(const std::vector<ContextEntry>& context) {
  std::vector<ContextEntry> out;
  for (const auto& e : context)
    if (e.area_id != kEmotionsAreaId) out.push_back(e);
  return out;
}

std::string fallback_reflection_question(const RiskDefinition& risk) {
  return "What evidence do you have about " + risk.name + "?";
}

Pipeline::Pipeline(Gateway& gateway, Clock clock, PipelineOptions options)
    : gateway_(gateway), clock_(std::move(clock)), options_(options) {}

void Pipeline::note(PromptTask task, std::string kind, std::string detail) {
  std::lock_guard lock(mu_);
  events_.push_back({std::string(to_string(task)), std::move(kind), std::move(detail)});
}

std::vector<PipelineEvent> Pipeline::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

ParsedOutput Pipeline::call(PromptTask task, const RenderedPrompt& prompt) {
  CompletionRequest request;
  request.task = task;
  request.prompt = prompt;
  request.max_output_units = options_.max_output_units;
  request.deadline = options_.deadline;
  const auto first = gateway_.complete(request);

  auto reprompt = [&](const std::vector<FieldError>& problems) {
    CompletionRequest retry = request;
    retry.attempt = 1;
    std::string why;
    for (const auto& p : problems) why += "\n- " + p.path + ": " + p.message;
    retry.prompt.user_block += "\n\nYour previous answer could not be used:" + why + "\n" + describe(prompt.schema);
    return gateway_.complete(retry).text;
  };
  auto parsed = parse_structured(first.text, prompt.schema, reprompt);
  if (parsed.stage != RepairStage::direct) note(task, "repaired", std::string(to_string(parsed.stage)));
  return parsed;
}

std::vector<ContextEntry> Pipeline::extract_context(const CoachingModel& model, const ProjectArea& area,
                                                    const std::vector<ChatMessage>& segment,
                                                    const std::vector<ContextEntry>& known) {
  std::map<std::int64_t, const ChatMessage*> sources;
  for (const auto& m : segment)
    if (m.speaker == Speaker::novice) sources.emplace(m.seq, &m);
  if (sources.empty()) throw ValidationError(std::vector<FieldError>{{"segment", "needs at least one novice message"}});

  const auto prompt = render(PromptTask::context_tagging, model, diagnosis_context(known), TaggingPayload{area.id, segment});
  const auto parsed = call(PromptTask::context_tagging, prompt);
  const auto allowed = context_keys_for(area.id);

  std::vector<ContextEntry> out;
  for (const auto& e : parsed.value["entries"]) {
    ContextEntry entry{area.id, trim(e["key"].get<std::string>()), trim(e["value"].get<std::string>()),
                       e["source_seq"].get<std::int64_t>()};
    if (std::find(allowed.begin(), allowed.end(), entry.key) == allowed.end()) {
      note(PromptTask::context_tagging, "dropped", "key \"" + entry.key + "\" not allowed for " + area.id);
      continue;
    }
    auto src = sources.find(entry.source_seq);
    if (src == sources.end()) {
      note(PromptTask::context_tagging, "dropped", "source_seq " + std::to_string(entry.source_seq) + " outside segment");
      continue;
    }
    if (!grounded_in(entry.value, src->second->text)) {
      note(PromptTask::context_tagging, "dropped", "value \"" + entry.value + "\" not grounded in the novice's words");
      continue;
    }
    out.push_back(std::move(entry));
  }
  if (out.empty()) throw Error(Errc::extraction_empty, "no verifiable statements for area " + area.id);
  return out;
}

std::string Pipeline::personalize_question(const CoachingModel& model, const ProjectArea& area,
                                           const std::vector<ContextEntry>& context) {
  const auto usable = diagnosis_context(context);
  if (usable.empty()) return area.example_question;
  try {
    const auto prompt =
        render(PromptTask::question_personalization, model, usable, PersonalizationPayload{area.id});
    auto question = trim(call(PromptTask::question_personalization, prompt).value["question"].get<std::string>());
    if (!question.empty()) return question;
  } catch (const Error& e) {
    if (is_harness_error(e)) throw;
    note(PromptTask::question_personalization, "fallback", std::string(e.reason()) + ": " + e.what());
  }
  return area.example_question;
}

std::vector<Diagnosis> Pipeline::diagnose(const CoachingModel& model, const std::vector<ContextEntry>& context,
                                          const std::vector<ChatMessage>& answers) {
  if (model.risk.enabled_risks().empty()) return {};
  const auto usable = diagnosis_context(context);
  std::vector<ChatMessage> verbatim;
  for (const auto& m : answers)
    if (m.speaker == Speaker::novice && m.area_id && *m.area_id != kEmotionsAreaId) verbatim.push_back(m);
  if (usable.empty() && verbatim.empty()) throw Error(Errc::no_context, "diagnosis needs project context");

  std::set<std::int64_t> valid_refs;
  for (const auto& e : usable) valid_refs.insert(e.source_seq);
  for (const auto& m : verbatim) valid_refs.insert(m.seq);

  const auto prompt = render(PromptTask::risk_diagnosis, model, usable, DiagnosisPayload{verbatim});
  const auto parsed = call(PromptTask::risk_diagnosis, prompt);
  const auto now = clock_();

  std::vector<Diagnosis> out;
  for (const auto& item : parsed.value["diagnoses"]) {
    Diagnosis d;
    d.risk_id = trim(item["risk_id"].get<std::string>());
    d.rationale = trim(item["rationale"].get<std::string>());
    if (!model.risk.is_enabled(d.risk_id)) {
      note(PromptTask::risk_diagnosis, "dropped", "risk \"" + d.risk_id + "\" is not an enabled risk");
      continue;
    }
    for (const auto& ref : item["evidence"]) {
      const auto seq = ref.get<std::int64_t>();
      if (valid_refs.count(seq) && std::find(d.evidence.begin(), d.evidence.end(), seq) == d.evidence.end()) {
        d.evidence.push_back(seq);
      }
    }
    if (d.evidence.empty()) {
      note(PromptTask::risk_diagnosis, "dropped", "risk \"" + d.risk_id + "\" cites no known context");
      continue;
    }
    if (std::any_of(out.begin(), out.end(), [&](const Diagnosis& x) { return x.risk_id == d.risk_id; })) {
      note(PromptTask::risk_diagnosis, "deduplicated", d.risk_id);
      continue;
    }
    std::sort(d.evidence.begin(), d.evidence.end());
    d.diagnosed_at = now;
    d.template_hash = prompt.template_hash;
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(), [&](const Diagnosis& a, const Diagnosis& b) {
    return model.risk.position(a.risk_id) < model.risk.position(b.risk_id);
  });
  return out;
}

std::vector<std::string> Pipeline::reflection_questions(const CoachingModel& model, const Diagnosis& diagnosis,
                                                        const std::vector<ContextEntry>& context) {
  const auto* risk = model.risk.find(diagnosis.risk_id);
  RiskDefinition fallback_risk;
  if (!risk) {
    fallback_risk.id = fallback_risk.name = diagnosis.risk_id;
    risk = &fallback_risk;
  }
  try {
    const auto prompt = render(PromptTask::reflection_questions, model, diagnosis_context(context),
                               ReflectionPayload{diagnosis});
    auto questions = string_list(call(PromptTask::reflection_questions, prompt).value["questions"]);
    if (questions.size() > 3) {
      note(PromptTask::reflection_questions, "truncated", std::to_string(questions.size()) + " questions");
      questions.resize(3);
    }
    if (!questions.empty()) return questions;
  } catch (const Error& e) {
    if (is_harness_error(e)) throw;
    note(PromptTask::reflection_questions, "fallback", std::string(e.reason()) + ": " + e.what());
  }
  return {fallback_reflection_question(*risk)};
}

std::vector<StrategySuggestion> Pipeline::suggest_strategies(const CoachingModel& model, const Session& session,
                                                             const std::optional<MentorGoals>& goals) {
  std::vector<const Diagnosis*> targets;
  const bool focused = goals && !goals->focus_risk_ids.empty();
  for (const auto& d : session.diagnoses) {
    if (!focused || std::find(goals->focus_risk_ids.begin(), goals->focus_risk_ids.end(), d.risk_id) !=
                        goals->focus_risk_ids.end()) {
      targets.push_back(&d);
    }
  }
  const auto context = diagnosis_context(session.context);
  std::vector<StrategySuggestion> out;
  for (const auto* d : targets) {
    StrategyPayload payload{*d, goals, std::nullopt};
    if (const auto* r = session.reflection_for(d->risk_id)) payload.reflection = *r;
    const auto prompt = render(PromptTask::strategy_suggestion, model, context, payload);
    const auto parsed = call(PromptTask::strategy_suggestion, prompt);
    StrategySuggestion s;
    s.risk_id = d->risk_id;
    s.coaching_questions = string_list(parsed.value["coaching_questions"]);
    s.hypothesized_root_causes = string_list(parsed.value["hypothesized_root_causes"]);
    s.rationale = trim(parsed.value["rationale"].get<std::string>());
    s.template_hash = prompt.template_hash;
    if (s.coaching_questions.empty()) {
      throw SchemaError(parsed.value.dump(), {{"$.coaching_questions", "no nonblank question"}});
    }
    out.push_back(std::move(s));
  }
  return out;
}

AgendaDocument Pipeline::synthesize_agenda(const CoachingModel& model, const Session& session) {
  if (session.phase != Phase::complete || !session.agenda) {
    throw Error(Errc::wrong_phase, "agenda synthesis needs a Complete session");
  }
  AgendaDocument doc;
  doc.session_id = session.id;
  doc.notes = session.agenda->notes;
  doc.template_hash = template_for(PromptTask::agenda_synthesis).hash;

  AgendaPayload payload;
  payload.notes = session.agenda->notes;
  for (const auto& id : session.agenda->selected) {
    AgendaItem item;
    item.risk_id = id;
    const auto* r = model.risk.find(id);
    item.risk_name = r ? r->name : id;
    if (const auto* refl = session.reflection_for(id); refl && refl->answer) item.reflection_excerpt = excerpt(*refl->answer);
    payload.items.push_back({id, item.reflection_excerpt});
    doc.items.push_back(std::move(item));
  }
  if (doc.items.empty()) return doc;

  const auto prompt = render(PromptTask::agenda_synthesis, model, diagnosis_context(session.context), payload);
  const auto parsed = call(PromptTask::agenda_synthesis, prompt);
  std::map<std::string, std::string> goals;
  for (const auto& item : parsed.value["items"]) {
    const auto id = item["risk_id"].get<std::string>();
    const bool selected = std::find(session.agenda->selected.begin(), session.agenda->selected.end(), id) !=
                          session.agenda->selected.end();
    if (!selected) {
      note(PromptTask::agenda_synthesis, "dropped", "agenda item for unselected risk \"" + id + "\"");
      continue;
    }
    goals.try_emplace(id, trim(item["discussion_goal"].get<std::string>()));
  }
  for (auto& item : doc.items) {
    auto it = goals.find(item.risk_id);
    item.discussion_goal = it != goals.end() && !it->second.empty()
                               ? it->second
                               : "Discuss how to address the " + item.risk_name + " risk.";
  }
  return doc;
}

// --- serialization -------------------------------------------------------

json to_json(const StrategySuggestion& s) {
  return json{{"risk_id", s.risk_id},
              {"coaching_questions", s.coaching_questions},
              {"hypothesized_root_causes", s.hypothesized_root_causes},
              {"rationale", s.rationale},
              {"template_hash", s.template_hash}};
}

StrategySuggestion strategy_from_json(const json& doc) {
  StrategySuggestion s;
  s.risk_id = doc.at("risk_id").get<std::string>();
  s.coaching_questions = doc.at("coaching_questions").get<std::vector<std::string>>();
  s.hypothesized_root_causes = doc.at("hypothesized_root_causes").get<std::vector<std::string>>();
  s.rationale = doc.at("rationale").get<std::string>();
  s.template_hash = doc.value("template_hash", "");
  return s;
}

json to_json(const AgendaDocument& a) {
  json items = json::array();
  for (const auto& i : a.items) {
    items.push_back({{"risk_id", i.risk_id},
                     {"risk_name", i.risk_name},
                     {"reflection_excerpt", i.reflection_excerpt},
                     {"discussion_goal", i.discussion_goal}});
  }
  return json{{"schema_version", 1},
              {"session_id", a.session_id},
              {"items", std::move(items)},
              {"notes", a.notes},
              {"template_hash", a.template_hash}};
}

AgendaDocument agenda_document_from_json(const json& doc) {
  AgendaDocument a;
  a.session_id = doc.at("session_id").get<std::string>();
  for (const auto& i : doc.at("items")) {
    a.items.push_back({i.at("risk_id").get<std::string>(), i.at("risk_name").get<std::string>(),
                       i.at("reflection_excerpt").get<std::string>(), i.at("discussion_goal").get<std::string>()});
  }
  a.notes = doc.at("notes").get<std::string>();
  a.template_hash = doc.value("template_hash", "");
  return a;
}

std::string render_agenda_text(const AgendaDocument& a) {
  std::string out = "# Meeting Agenda\n\nSession: " + a.session_id + "\n\n## Items\n\n";
  if (a.items.empty()) out += "(no risks selected)\n";
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    const auto& item = a.items[i];
    out += std::to_string(i + 1) + ". " + item.risk_name + " (" + item.risk_id + ")\n";
    out += "   Goal: " + item.discussion_goal + "\n";
    out += "   Novice reflection: " + (item.reflection_excerpt.empty() ? "(none)" : item.reflection_excerpt) + "\n";
  }
  out += "\n## Notes\n\n" + (a.notes.empty() ? std::string("(empty)") : a.notes) + "\n";
  out += "\nTemplate: " + a.template_hash + "\n";
  return out;
}

}  // namespace coach
