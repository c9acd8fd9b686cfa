#include "coach/prompts.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "coach/error.hpp"
#include "templates_embedded.hpp"

namespace coach {

std::string_view to_string(PromptTask t) {
  switch (t) {
    case PromptTask::context_tagging: return "ContextTagging";
    case PromptTask::question_personalization: return "QuestionPersonalization";
    case PromptTask::risk_diagnosis: return "RiskDiagnosis";
    case PromptTask::reflection_questions: return "ReflectionQuestions";
    case PromptTask::strategy_suggestion: return "StrategySuggestion";
    case PromptTask::agenda_synthesis: return "AgendaSynthesis";
  }
  return "Unknown";
}

PromptTask prompt_task_from_string(std::string_view s) {
  for (auto t : kAllTasks)
    if (to_string(t) == s) return t;
  throw ValidationError(std::vector<FieldError>{{"task", "unknown task kind \"" + std::string(s) + "\""}});
}

// --- schema descriptors ---------------------------------------------------

namespace {

FieldSpec str(std::string name) { return {std::move(name), ValueKind::string, true, {}}; }
FieldSpec integer(std::string name) { return {std::move(name), ValueKind::integer, false, {}}; }
FieldSpec strings(std::string name, bool nonempty) { return {std::move(name), ValueKind::string_list, nonempty, {}}; }
FieldSpec integers(std::string name, bool nonempty) { return {std::move(name), ValueKind::integer_list, nonempty, {}}; }
FieldSpec objects(std::string name, std::vector<FieldSpec> items) {
  return {std::move(name), ValueKind::object_list, false, std::move(items)};
}

std::map<PromptTask, SchemaDescriptor> build_schemas() {
  using Shape = SchemaDescriptor::Shape;
  std::map<PromptTask, SchemaDescriptor> m;
  m[PromptTask::context_tagging] = {"context_tagging", Shape::object,
                                    {objects("entries", {str("key"), str("value"), integer("source_seq")})}};
  m[PromptTask::question_personalization] = {"question_personalization", Shape::object, {str("question")}};
  m[PromptTask::risk_diagnosis] = {
      "risk_diagnosis", Shape::object,
      {objects("diagnoses", {str("risk_id"), str("rationale"), integers("evidence", true)})}};
  m[PromptTask::reflection_questions] = {"reflection_questions", Shape::object, {strings("questions", true)}};
  m[PromptTask::strategy_suggestion] = {
      "strategy_suggestion", Shape::object,
      {strings("coaching_questions", true), strings("hypothesized_root_causes", false), str("rationale")}};
  m[PromptTask::agenda_synthesis] = {"agenda_synthesis", Shape::object,
                                     {objects("items", {str("risk_id"), str("discussion_goal")})}};
  return m;
}

void check_fields(const json& obj, const std::vector<FieldSpec>& fields, const std::string& path,
                  std::vector<FieldError>& errors) {
  if (!obj.is_object()) {
    errors.push_back({path, "expected object"});
    return;
  }
  for (const auto& [key, _] : obj.items()) {
    const bool known = std::any_of(fields.begin(), fields.end(), [&](const FieldSpec& f) { return f.name == key; });
    if (!known) errors.push_back({path + "." + key, "unknown field"});
  }
  for (const auto& f : fields) {
    const std::string p = path + "." + f.name;
    auto it = obj.find(f.name);
    if (it == obj.end()) {
      errors.push_back({p, "missing required field"});
      continue;
    }
    const json& v = *it;
    switch (f.kind) {
      case ValueKind::string:
        if (!v.is_string()) {
          errors.push_back({p, "expected string"});
        } else if (f.nonempty && trim(v.get<std::string>()).empty()) {
          errors.push_back({p, "must be nonempty"});
        }
        break;
      case ValueKind::integer:
        if (!v.is_number_integer()) errors.push_back({p, "expected integer"});
        break;
      case ValueKind::string_list:
      case ValueKind::integer_list:
      case ValueKind::object_list: {
        if (!v.is_array()) {
          errors.push_back({p, "expected list"});
          break;
        }
        if (f.nonempty && v.empty()) errors.push_back({p, "must have at least one element"});
        for (std::size_t i = 0; i < v.size(); ++i) {
          const std::string ip = p + "[" + std::to_string(i) + "]";
          if (f.kind == ValueKind::string_list && !v[i].is_string()) errors.push_back({ip, "expected string"});
          if (f.kind == ValueKind::integer_list && !v[i].is_number_integer()) errors.push_back({ip, "expected integer"});
          if (f.kind == ValueKind::object_list) check_fields(v[i], f.item_fields, ip, errors);
        }
        break;
      }
    }
  }
}

std::string describe_fields(const std::vector<FieldSpec>& fields) {
  std::string out = "{";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& f = fields[i];
    if (i) out += ", ";
    out += "\"" + f.name + "\": ";
    switch (f.kind) {
      case ValueKind::string: out += "string"; break;
      case ValueKind::integer: out += "integer"; break;
      case ValueKind::string_list: out += "[string]"; break;
      case ValueKind::integer_list: out += "[integer]"; break;
      case ValueKind::object_list: out += "[" + describe_fields(f.item_fields) + "]"; break;
    }
  }
  return out + "}";
}

}  // namespace

const SchemaDescriptor& schema_for(PromptTask t) {
  static const auto schemas = build_schemas();
  return schemas.at(t);
}

std::vector<FieldError> validate_against(const json& value, const SchemaDescriptor& schema) {
  std::vector<FieldError> errors;
  if (schema.shape == SchemaDescriptor::Shape::object) {
    check_fields(value, schema.fields, "$", errors);
  } else if (!value.is_array()) {
    errors.push_back({"$", "expected list"});
  } else {
    for (std::size_t i = 0; i < value.size(); ++i) check_fields(value[i], schema.fields, "$[" + std::to_string(i) + "]", errors);
  }
  return errors;
}

std::string describe(const SchemaDescriptor& schema) {
  const std::string shape = schema.shape == SchemaDescriptor::Shape::object
                                ? describe_fields(schema.fields)
                                : "[" + describe_fields(schema.fields) + "]";
  return "Respond with JSON of exactly this shape: " + shape +
         ". Every field is required and no other fields are allowed. Do not wrap the JSON in prose.";
}

// --- templates ------------------------------------------------------------

PromptTemplate parse_template(PromptTask task, std::string_view source) {
  PromptTemplate t;
  t.task = task;
  t.source = std::string(source);
  t.hash = sha256_hex(source);

  std::map<std::string, std::string> sections;
  std::string current;
  std::istringstream in(t.source);
  std::string line;
  while (std::getline(in, line)) {
    if (current.empty() && line.rfind("# template:", 0) == 0) t.name = trim(line.substr(11));
    if (line.size() > 8 && line.rfind("=== ", 0) == 0 && line.substr(line.size() - 4) == " ===") {
      current = line.substr(4, line.size() - 8);
      sections[current];
      continue;
    }
    if (current.empty()) continue;
    auto& body = sections[current];
    if (!body.empty()) body += '\n';
    body += line;
  }
  std::vector<FieldError> errors;
  for (const char* name : {"SYSTEM", "KNOWLEDGE", "CONTEXT", "TASK"}) {
    if (trim(sections[name]).empty()) errors.push_back({std::string(to_string(task)) + "." + name, "missing section"});
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  t.system = trim(sections["SYSTEM"]);
  t.knowledge = trim(sections["KNOWLEDGE"]);
  t.context = trim(sections["CONTEXT"]);
  t.user = trim(sections["TASK"]);
  return t;
}

const PromptTemplate& template_for(PromptTask task) {
  static const auto templates = [] {
    std::map<PromptTask, PromptTemplate> m;
    for (auto t : kAllTasks) m.emplace(t, parse_template(t, detail::embedded_template(t)));
    return m;
  }();
  return templates.at(task);
}

// --- rendering ------------------------------------------------------------

std::string RenderedPrompt::text() const {
  std::string out;
  out += kKnowledgeHeader;
  out += '\n' + knowledge_block + "\n\n";
  out += kContextHeader;
  out += '\n' + context_block + "\n\n";
  out += kTaskHeader;
  out += '\n' + user_block + '\n';
  return out;
}

std::string RenderedPrompt::hash() const { return sha256_hex(system_instructions + "\n" + text()); }

std::vector<std::string> context_keys_for(std::string_view area_id) {
  static const std::map<std::string, std::vector<std::string>, std::less<>> keys = {
      {"project-information", {"Problem", "Solution", "Customers"}},
      {"current-focus", {"Focus", "Actions"}},
      {"learning", {"Learning"}},
      {"obstacles", {"Obstacles"}},
      {"plan", {"Goals", "Next steps"}},
      {"coaching-outcome", {"Desired outcome"}},
      {"emotions", {}},  // never tagged
  };
  auto it = keys.find(area_id);
  if (it == keys.end()) return {"Summary"};
  return it->second;
}

std::string render_context(const std::vector<ContextEntry>& context, const ProjectModel& project) {
  if (context.empty()) return "No prior project context has been provided.";
  std::string out;
  for (const auto& area : project.areas) {
    bool header = false;
    for (const auto& e : context) {
      if (e.area_id != area.id) continue;
      if (!header) {
        if (!out.empty()) out += '\n';
        out += "[" + area.name + "]\n";
        header = true;
      }
      out += e.key + ": " + e.value + " [ref:" + std::to_string(e.source_seq) + "]\n";
    }
  }
  for (const auto& e : context) {
    if (!project.find(e.area_id)) out += e.key + ": " + e.value + " [ref:" + std::to_string(e.source_seq) + "]\n";
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

namespace {

std::string substitute(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, 2, "{{") == 0) {
      auto end = text.find("}}", i + 2);
      if (end != std::string_view::npos) {
        auto it = values.find(std::string(text.substr(i + 2, end - i - 2)));
        if (it != values.end()) {
          out += it->second;
          i = end + 2;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

std::string area_knowledge(const ProjectArea& a) {
  return "Area: " + a.name + "\nDescription: " + a.description + "\nExample question: " + a.example_question;
}

std::string risk_knowledge(const RiskDefinition& r) {
  std::string out = "- " + r.id + " (" + r.name + "): " + r.description;
  for (const auto& ex : r.examples) out += "\n  Example: " + ex;
  return out;
}

const ProjectArea& require_area(const CoachingModel& k, const std::string& id) {
  const auto* a = k.project.find(id);
  if (!a) throw Error(Errc::unknown_area, "unknown area \"" + id + "\"");
  return *a;
}

const RiskDefinition& require_enabled_risk(const CoachingModel& k, const std::string& id) {
  const auto* r = k.risk.find(id);
  if (!r || !r->enabled) throw Error(Errc::unknown_risk, "risk \"" + id + "\" is not enabled");
  return *r;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string refs(const std::vector<std::int64_t>& seqs) {
  std::vector<std::string> parts;
  for (auto s : seqs) parts.push_back(std::to_string(s));
  return join(parts, ", ");
}

std::string diagnosis_summary(const Diagnosis& d, const RiskDefinition& r) {
  return "Diagnosed risk: " + r.id + " (" + r.name + ")\nRationale: " + d.rationale +
         "\nEvidence references: " + refs(d.evidence);
}

std::size_t expected_index(PromptTask t) {
  switch (t) {
    case PromptTask::context_tagging: return 0;
    case PromptTask::question_personalization: return 1;
    case PromptTask::risk_diagnosis: return 2;
    case PromptTask::reflection_questions: return 3;
    case PromptTask::strategy_suggestion: return 4;
    case PromptTask::agenda_synthesis: return 5;
  }
  return 0;
}

}  // namespace

RenderedPrompt render(PromptTask task, const CoachingModel& k, const std::vector<ContextEntry>& context,
                      const PromptPayload& payload) {
  if (payload.index() != expected_index(task)) {
    throw Error(Errc::payload_mismatch, "payload does not match task " + std::string(to_string(task)));
  }
  const auto& tmpl = template_for(task);
  std::map<std::string, std::string> values;
  values["schema"] = describe(schema_for(task));
  values["context"] = render_context(context, k.project);

  switch (task) {
    case PromptTask::context_tagging: {
      const auto& p = std::get<TaggingPayload>(payload);
      const auto& area = require_area(k, p.area_id);
      values["knowledge"] = area_knowledge(area);
      values["area_name"] = area.name;
      values["allowed_keys"] = join(context_keys_for(area.id), ", ");
      std::string lines;
      for (const auto& m : p.segment) {
        if (m.speaker != Speaker::novice) continue;
        if (!lines.empty()) lines += '\n';
        lines += "[ref:" + std::to_string(m.seq) + "] " + m.text;
      }
      values["payload"] = lines;
      break;
    }
    case PromptTask::question_personalization: {
      const auto& area = require_area(k, std::get<PersonalizationPayload>(payload).area_id);
      values["knowledge"] = area_knowledge(area);
      values["area_name"] = area.name;
      break;
    }
    case PromptTask::risk_diagnosis: {
      const auto& p = std::get<DiagnosisPayload>(payload);
      std::vector<ContextEntry> shared;
      for (const auto& e : context)
        if (e.area_id != kEmotionsAreaId) shared.push_back(e);
      values["context"] = render_context(shared, k.project);
      std::vector<std::string> lines;
      for (const auto* r : k.risk.enabled_risks()) lines.push_back(risk_knowledge(*r));
      values["knowledge"] = join(lines, "\n");
      if (!p.answers.empty()) {
        std::string answers = "\n\nThe novice's answers, verbatim:";
        for (const auto& m : p.answers) {
          if (m.area_id == kEmotionsAreaId) continue;
          const auto* area = m.area_id ? k.project.find(*m.area_id) : nullptr;
          answers += "\n[ref:" + std::to_string(m.seq) + "] (" + (area ? area->name : std::string("Answer")) + ") " +
                     m.text;
        }
        values["context"] += answers;
      }
      break;
    }
    case PromptTask::reflection_questions: {
      const auto& d = std::get<ReflectionPayload>(payload).diagnosis;
      const auto& r = require_enabled_risk(k, d.risk_id);
      values["knowledge"] = risk_knowledge(r);
      values["payload"] = diagnosis_summary(d, r);
      break;
    }
    case PromptTask::strategy_suggestion: {
      const auto& p = std::get<StrategyPayload>(payload);
      const auto& r = require_enabled_risk(k, p.diagnosis.risk_id);
      values["knowledge"] = risk_knowledge(r);
      std::string text = diagnosis_summary(p.diagnosis, r);
      if (p.reflection) {
        text += "\nReflection question asked: " + p.reflection->question;
        text += "\nNovice's reflection: " + p.reflection->answer.value_or("(no answer)");
      }
      if (p.goals) {
        text += "\nMentor coaching goals:";
        text += "\nFocus risks: " + (p.goals->focus_risk_ids.empty() ? std::string("(none)") : join(p.goals->focus_risk_ids, ", "));
        text += "\nDesired outcomes: " + p.goals->desired_outcomes;
      } else {
        text += "\nThe mentor has not specified coaching goals.";
      }
      values["payload"] = text;
      break;
    }
    case PromptTask::agenda_synthesis: {
      const auto& p = std::get<AgendaPayload>(payload);
      std::string text;
      for (std::size_t i = 0; i < p.items.size(); ++i) {
        const auto& item = p.items[i];
        const auto* r = k.risk.find(item.risk_id);
        text += std::to_string(i + 1) + ". [risk:" + item.risk_id + "] " + (r ? r->name : item.risk_id) +
                "\n   Reflection: " + (item.reflection.empty() ? "(none)" : item.reflection) + "\n";
      }
      if (p.items.empty()) text += "(no risks selected)\n";
      text += "Notes from the novice: " + (p.notes.empty() ? std::string("(none)") : p.notes);
      values["payload"] = text;
      break;
    }
  }

  RenderedPrompt out;
  out.task = task;
  out.system_instructions = tmpl.system;
  out.knowledge_block = substitute(tmpl.knowledge, values);
  out.context_block = substitute(tmpl.context, values);
  out.user_block = substitute(tmpl.user, values);
  out.schema = schema_for(task);
  out.template_hash = tmpl.hash;
  return out;
}

}  // namespace coach
