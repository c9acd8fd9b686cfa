#include "coach/model_registry.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "coach/error.hpp"

namespace coach {

namespace {

constexpr std::int64_t kDocumentSchemaVersion = 1;

ProjectArea area(std::string id, std::string name, std::string description, std::string question, int order,
                 bool required = true) {
  return {std::move(id), std::move(name), std::move(description), std::move(question), order, required};
}

RiskDefinition risk(std::string name, std::string description) {
  RiskDefinition r;
  r.id = slugify(name);
  r.name = std::move(name);
  r.description = std::move(description);
  r.created_by = "seed";
  return r;
}

bool mentions_risk(std::string_view description) {
  return to_lower(description).find("risk") != std::string::npos;
}

// Collects (path, message) problems while walking a document.
class Checker {
 public:
  void fail(std::string path, std::string message) { errors_.push_back({std::move(path), std::move(message)}); }
  bool ok() const { return errors_.empty(); }
  void raise() const {
    if (!errors_.empty()) throw ValidationError(errors_);
  }

  const json* field(const json& obj, const std::string& path, const char* name) {
    auto it = obj.find(name);
    if (it == obj.end()) {
      fail(path + "." + name, "missing field");
      return nullptr;
    }
    return &*it;
  }

  std::string string(const json& obj, const std::string& path, const char* name, bool nonempty) {
    const json* v = field(obj, path, name);
    if (!v) return {};
    if (!v->is_string()) {
      fail(path + "." + name, "expected string");
      return {};
    }
    auto s = v->get<std::string>();
    if (nonempty && trim(s).empty()) fail(path + "." + name, "must be nonempty");
    return s;
  }

  std::int64_t integer(const json& obj, const std::string& path, const char* name, std::int64_t min) {
    const json* v = field(obj, path, name);
    if (!v) return 0;
    if (!v->is_number_integer()) {
      fail(path + "." + name, "expected integer");
      return 0;
    }
    auto n = v->get<std::int64_t>();
    if (n < min) fail(path + "." + name, "must be >= " + std::to_string(min));
    return n;
  }

  bool boolean(const json& obj, const std::string& path, const char* name) {
    const json* v = field(obj, path, name);
    if (!v) return false;
    if (!v->is_boolean()) {
      fail(path + "." + name, "expected boolean");
      return false;
    }
    return v->get<bool>();
  }

  std::vector<std::string> strings(const json& obj, const std::string& path, const char* name) {
    const json* v = field(obj, path, name);
    std::vector<std::string> out;
    if (!v) return out;
    if (!v->is_array()) {
      fail(path + "." + name, "expected list of strings");
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& el = (*v)[i];
      if (!el.is_string()) {
        fail(path + "." + name + "[" + std::to_string(i) + "]", "expected string");
      } else {
        out.push_back(el.get<std::string>());
      }
    }
    return out;
  }

  void only_fields(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, _] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(path + "." + key, "unknown field");
      }
    }
  }

  void schema_version(const json& doc) {
    auto it = doc.find("schema_version");
    if (it == doc.end()) return;
    if (!it->is_number_integer()) {
      fail("schema_version", "expected integer");
    } else if (it->get<std::int64_t>() > kDocumentSchemaVersion) {
      throw Error(Errc::migration_required,
                  "document schema_version " + std::to_string(it->get<std::int64_t>()) + " is newer than " +
                      std::to_string(kDocumentSchemaVersion));
    }
  }

 private:
  std::vector<FieldError> errors_;
};

RiskDefinition check_risk(Checker& c, const json& doc, const std::string& path) {
  RiskDefinition r;
  if (!doc.is_object()) {
    c.fail(path, "expected object");
    return r;
  }
  c.only_fields(doc, path, {"id", "name", "description", "examples", "enabled", "created_by", "revision"});
  r.id = c.string(doc, path, "id", true);
  if (!r.id.empty() && !is_slug(r.id)) c.fail(path + ".id", "must be a lowercase slug");
  r.name = c.string(doc, path, "name", true);
  r.description = c.string(doc, path, "description", true);
  if (!trim(r.description).empty() && !mentions_risk(r.description)) {
    c.fail(path + ".description", "must state a condition and its risk consequence");
  }
  r.examples = c.strings(doc, path, "examples");
  r.enabled = c.boolean(doc, path, "enabled");
  r.created_by = c.string(doc, path, "created_by", true);
  r.revision = c.integer(doc, path, "revision", 0);
  return r;
}

void check_risk_value(const RiskDefinition& r) {
  Checker c;
  check_risk(c, to_json(r), "risk");
  c.raise();
}

}  // namespace

const ProjectArea* ProjectModel::find(std::string_view id) const {
  for (const auto& a : areas)
    if (a.id == id) return &a;
  return nullptr;
}

const RiskDefinition* RiskModel::find(std::string_view id) const {
  for (const auto& r : risks)
    if (r.id == id) return &r;
  return nullptr;
}

bool RiskModel::is_enabled(std::string_view id) const {
  const auto* r = find(id);
  return r && r->enabled;
}

std::size_t RiskModel::position(std::string_view id) const {
  for (std::size_t i = 0; i < risks.size(); ++i)
    if (risks[i].id == id) return i;
  return risks.size();
}

std::vector<const RiskDefinition*> RiskModel::enabled_risks() const {
  std::vector<const RiskDefinition*> out;
  for (const auto& r : risks)
    if (r.enabled) out.push_back(&r);
  return out;
}

CoachingModel seed_default_models() {
  CoachingModel s;
  s.project.version = 1;
  s.project.areas = {
      area("project-information", "Project information",
           "The overview of a novice’s venture, including information about the problem this venture aims to "
           "solve, and the proposed solution to solve that problem.",
           "What is the problem you are trying to solve, and what is your proposed solution to solve this problem?",
           0),
      area("current-focus", "Current Focus",
           "The specific aspect of the venture that the novice is currently focusing on and taking action on.",
           "What specific aspects of your venture are you currently focusing on? What actions are you taking to "
           "make progress on that?",
           1),
      area("learning", "Learning",
           "The most useful and critical learning that the novice has gained recently about their venture.",
           "Is there any learning that has been particularly beneficial or critical for your venture?", 2),
      area("obstacles", "Obstacles", "Obstacles or roadblocks that are slowing the novice down.",
           "Is there anything that is currently slowing you down?", 3),
      area("plan", "Plan", "Goals that the novice plans to accomplish in the next few weeks.",
           "What goals are you planning to accomplish in the next few weeks?", 4),
      area("coaching-outcome", "Coaching outcome",
           "Specific outcome that the novice is looking to achieve through the next meeting with the mentor.",
           "Looking ahead, what is a success metric that will make your next coaching meeting worthwhile?", 5),
      area("emotions", "Emotions", "Emotions that the novice is currently experiencing with their project.",
           "How would you describe your feelings lately? Excited? Nervous?", 6, false),
  };

  s.risk.version = 1;
  s.risk.risks = {
      risk("Communicate with customers",
           "If novices do not clearly articulate and communicate their brand promise and how the product delivers "
           "on it, there is a risk that customers may perceive the solution as inadequate."),
      risk("Customers and needs",
           "If novices cannot articulate customers' needs that are supported by evidence, there is a risk they "
           "will misconstrue the root cause(s) of that need and design ineffective solutions."),
      risk("Distribution channels",
           "If novices do not know how they will distribute the solutions or if they lack evidence that their "
           "strategy will work, there is a risk of designing something that never goes into customers' hands."),
      risk("Existing solutions",
           "If novices have not thoroughly researched existing solutions, and cannot articulate why their solution "
           "is superior to those existing solutions, there is a risk that the customer will not adopt it."),
      risk("Identify risky assumptions",
           "If novices have not identified and validated risky assumptions in their ideas and concepts, there is a "
           "risk of these unvalidated assumptions hindering their company's growth and adoption."),
      risk("Perfectionism",
           "If novices have built a product but have been delaying showing the product to customers, there is a "
           "risk that they are being perfectionist."),
      risk("Planning",
           "If novices' goals are not actionable, feasible, and measurable, or based on important risks, there is a "
           "risk that they may end up doing busy work that does not produce value nor help them progress."),
      risk("Raising capital",
           "If novices are overly focused on raising venture capital, there is a risk that raising money is the "
           "trophy they seek at the expense of building a great product and business."),
      risk("Teamwork",
           "If there is a lack of cohesion or alignment on buy-ins and expectations among team members, there is a "
           "risk for teamwork to negatively affect the venture's progress."),
      risk("Testing",
           "When novices test their products, if they do not have valid processes and measurable, specific metrics "
           "for success, there is a risk of not making progress toward a solution the customers want."),
      risk("Value propositions",
           "If novices cannot explain and provide evidence of how their solution will solve the customer's problem, "
           "there is a risk that it will not."),
  };
  return s;
}

// --- serialization -------------------------------------------------------

json to_json(const ProjectArea& a) {
  return json{{"id", a.id},
              {"name", a.name},
              {"description", a.description},
              {"example_question", a.example_question},
              {"order", a.order},
              {"required", a.required}};
}

json to_json(const ProjectModel& m) {
  json areas = json::array();
  for (const auto& a : m.areas) areas.push_back(to_json(a));
  return json{{"schema_version", kDocumentSchemaVersion}, {"version", m.version}, {"areas", std::move(areas)}};
}

json to_json(const RiskDefinition& r) {
  return json{{"id", r.id},
              {"name", r.name},
              {"description", r.description},
              {"examples", r.examples},
              {"enabled", r.enabled},
              {"created_by", r.created_by},
              {"revision", r.revision}};
}

json to_json(const RiskModel& m) {
  json risks = json::array();
  for (const auto& r : m.risks) risks.push_back(to_json(r));
  return json{{"schema_version", kDocumentSchemaVersion}, {"version", m.version}, {"risks", std::move(risks)}};
}

std::string_view to_string(AuditAction a) {
  switch (a) {
    case AuditAction::add_risk: return "add_risk";
    case AuditAction::revise_risk: return "revise_risk";
    case AuditAction::set_enabled: return "set_enabled";
    case AuditAction::revise_area: return "revise_area";
  }
  return "unknown";
}

AuditAction audit_action_from_string(std::string_view s) {
  for (auto a : {AuditAction::add_risk, AuditAction::revise_risk, AuditAction::set_enabled, AuditAction::revise_area})
    if (to_string(a) == s) return a;
  throw ValidationError(std::vector<FieldError>{{"action", "unknown audit action: " + std::string(s)}});
}

json to_json(const AuditEntry& e) {
  return json{{"schema_version", kDocumentSchemaVersion},
              {"seq", e.seq},
              {"timestamp", format_timestamp(e.timestamp)},
              {"author", e.author},
              {"action", to_string(e.action)},
              {"target_id", e.target_id},
              {"model_version", e.model_version},
              {"before", e.before},
              {"after", e.after}};
}

AuditEntry audit_entry_from_json(const json& doc) {
  Checker c;
  if (!doc.is_object()) throw ValidationError(std::vector<FieldError>{{"", "expected object"}});
  c.schema_version(doc);
  AuditEntry e;
  e.seq = c.integer(doc, "", "seq", 0);
  auto ts = c.string(doc, "", "timestamp", true);
  e.author = c.string(doc, "", "author", true);
  auto action = c.string(doc, "", "action", true);
  e.target_id = c.string(doc, "", "target_id", true);
  e.model_version = c.integer(doc, "", "model_version", 0);
  if (const json* b = c.field(doc, "", "before")) e.before = *b;
  if (const json* a = c.field(doc, "", "after")) e.after = *a;
  c.raise();
  e.timestamp = parse_timestamp(ts);
  e.action = audit_action_from_string(action);
  return e;
}

ModelKind model_kind_from_string(std::string_view s) {
  if (s == "project") return ModelKind::project;
  if (s == "risk") return ModelKind::risk;
  throw ValidationError(std::vector<FieldError>{{"kind", "expected project or risk, got " + std::string(s)}});
}

ProjectModel validate_project_model(const json& doc) {
  Checker c;
  if (!doc.is_object()) throw ValidationError(std::vector<FieldError>{{"", "expected object"}});
  c.schema_version(doc);
  c.only_fields(doc, "", {"schema_version", "version", "areas"});
  ProjectModel m;
  m.version = c.integer(doc, "", "version", 1);
  const json* areas = c.field(doc, "", "areas");
  if (areas && !areas->is_array()) {
    c.fail(".areas", "expected list");
  } else if (areas) {
    if (areas->empty()) c.fail(".areas", "at least one area is required");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < areas->size(); ++i) {
      const std::string path = ".areas[" + std::to_string(i) + "]";
      const json& a = (*areas)[i];
      if (!a.is_object()) {
        c.fail(path, "expected object");
        continue;
      }
      c.only_fields(a, path, {"id", "name", "description", "example_question", "order", "required"});
      ProjectArea pa;
      pa.id = c.string(a, path, "id", true);
      if (!pa.id.empty() && !is_slug(pa.id)) c.fail(path + ".id", "must be a lowercase slug");
      if (!pa.id.empty() && !ids.insert(pa.id).second) c.fail(path + ".id", "duplicate id \"" + pa.id + "\"");
      pa.name = c.string(a, path, "name", true);
      pa.description = c.string(a, path, "description", true);
      pa.example_question = c.string(a, path, "example_question", true);
      pa.order = static_cast<int>(c.integer(a, path, "order", 0));
      pa.required = c.boolean(a, path, "required");
      m.areas.push_back(std::move(pa));
    }
    std::vector<int> orders;
    for (const auto& a : m.areas) orders.push_back(a.order);
    std::sort(orders.begin(), orders.end());
    for (std::size_t i = 0; i < orders.size(); ++i) {
      if (orders[i] != static_cast<int>(i)) {
        c.fail(".areas", "order values must be a permutation of 0.." + std::to_string(orders.size() - 1));
        break;
      }
    }
  }
  c.raise();
  std::sort(m.areas.begin(), m.areas.end(), [](const auto& x, const auto& y) { return x.order < y.order; });
  return m;
}

RiskModel validate_risk_model(const json& doc) {
  Checker c;
  if (!doc.is_object()) throw ValidationError(std::vector<FieldError>{{"", "expected object"}});
  c.schema_version(doc);
  c.only_fields(doc, "", {"schema_version", "version", "risks"});
  RiskModel m;
  m.version = c.integer(doc, "", "version", 1);
  const json* risks = c.field(doc, "", "risks");
  if (risks && !risks->is_array()) {
    c.fail(".risks", "expected list");
  } else if (risks) {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < risks->size(); ++i) {
      const std::string path = ".risks[" + std::to_string(i) + "]";
      auto r = check_risk(c, (*risks)[i], path);
      if (!r.id.empty() && !ids.insert(r.id).second) c.fail(path + ".id", "duplicate id \"" + r.id + "\"");
      m.risks.push_back(std::move(r));
    }
  }
  c.raise();
  return m;
}

RiskDefinition validate_risk_definition(const json& doc, std::string_view path) {
  Checker c;
  auto r = check_risk(c, doc, std::string(path));
  c.raise();
  return r;
}

// --- edits ---------------------------------------------------------------

namespace {

AuditEntry make_entry(const EditStamp& stamp, AuditAction action, std::string target, json before, json after,
                      std::int64_t model_version) {
  AuditEntry e;
  e.seq = stamp.seq;
  e.timestamp = stamp.timestamp;
  e.author = stamp.author;
  e.action = action;
  e.target_id = std::move(target);
  e.before = std::move(before);
  e.after = std::move(after);
  e.model_version = model_version;
  return e;
}

void require_author(const EditStamp& stamp) {
  if (trim(stamp.author).empty()) throw ValidationError(std::vector<FieldError>{{"author", "must be nonempty"}});
}

std::optional<std::string> optional_string(const json& doc, const char* name, std::vector<FieldError>& errors) {
  auto it = doc.find(name);
  if (it == doc.end()) return std::nullopt;
  if (!it->is_string()) {
    errors.push_back({name, "expected string"});
    return std::nullopt;
  }
  return it->get<std::string>();
}

std::optional<bool> optional_bool(const json& doc, const char* name, std::vector<FieldError>& errors) {
  auto it = doc.find(name);
  if (it == doc.end()) return std::nullopt;
  if (!it->is_boolean()) {
    errors.push_back({name, "expected boolean"});
    return std::nullopt;
  }
  return it->get<bool>();
}

}  // namespace

RiskPatch risk_patch_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError(std::vector<FieldError>{{"", "expected object"}});
  std::vector<FieldError> errors;
  for (const auto& [key, _] : doc.items()) {
    if (key != "name" && key != "description" && key != "examples" && key != "enabled") {
      errors.push_back({key, "unknown or immutable field"});
    }
  }
  RiskPatch p;
  p.name = optional_string(doc, "name", errors);
  p.description = optional_string(doc, "description", errors);
  p.enabled = optional_bool(doc, "enabled", errors);
  if (auto it = doc.find("examples"); it != doc.end()) {
    if (!it->is_array() || !std::all_of(it->begin(), it->end(), [](const json& e) { return e.is_string(); })) {
      errors.push_back({"examples", "expected list of strings"});
    } else {
      p.examples = it->get<std::vector<std::string>>();
    }
  }
  if (errors.empty() && p.empty()) errors.push_back({"", "patch changes nothing"});
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return p;
}

AreaPatch area_patch_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError(std::vector<FieldError>{{"", "expected object"}});
  std::vector<FieldError> errors;
  for (const auto& [key, _] : doc.items()) {
    if (key != "name" && key != "description" && key != "example_question" && key != "required") {
      errors.push_back({key, "unknown or immutable field"});
    }
  }
  AreaPatch p;
  p.name = optional_string(doc, "name", errors);
  p.description = optional_string(doc, "description", errors);
  p.example_question = optional_string(doc, "example_question", errors);
  p.required = optional_bool(doc, "required", errors);
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return p;
}

ModelEdit<RiskModel> add_risk(const RiskModel& model, RiskDefinition def, const EditStamp& stamp) {
  require_author(stamp);
  if (def.id.empty()) def.id = slugify(def.name);
  if (def.created_by.empty()) def.created_by = stamp.author;
  def.revision = 0;
  check_risk_value(def);
  if (model.find(def.id)) throw Error(Errc::duplicate_id, "risk id \"" + def.id + "\" already exists");

  RiskModel next = model;
  next.version = model.version + 1;
  next.risks.push_back(def);
  auto entry = make_entry(stamp, AuditAction::add_risk, def.id, nullptr, to_json(def), next.version);
  return {std::move(next), std::move(entry)};
}

ModelEdit<RiskModel> revise_risk(const RiskModel& model, std::string_view id, const RiskPatch& patch,
                                 const EditStamp& stamp) {
  require_author(stamp);
  const auto* current = model.find(id);
  if (!current) throw Error(Errc::unknown_risk, "unknown risk \"" + std::string(id) + "\"");
  if (patch.empty()) throw ValidationError(std::vector<FieldError>{{"", "patch changes nothing"}});

  RiskDefinition revised = *current;
  if (patch.name) revised.name = *patch.name;
  if (patch.description) revised.description = *patch.description;
  if (patch.examples) revised.examples = *patch.examples;
  if (patch.enabled) revised.enabled = *patch.enabled;
  revised.revision = current->revision + 1;
  check_risk_value(revised);

  RiskModel next = model;
  next.version = model.version + 1;
  next.risks[model.position(id)] = revised;
  auto entry =
      make_entry(stamp, AuditAction::revise_risk, revised.id, to_json(*current), to_json(revised), next.version);
  return {std::move(next), std::move(entry)};
}

ModelEdit<RiskModel> set_enabled(const RiskModel& model, std::string_view id, bool enabled, const EditStamp& stamp) {
  require_author(stamp);
  const auto* current = model.find(id);
  if (!current) throw Error(Errc::unknown_risk, "unknown risk \"" + std::string(id) + "\"");

  RiskDefinition revised = *current;
  revised.enabled = enabled;
  revised.revision = current->revision + 1;

  RiskModel next = model;
  next.version = model.version + 1;
  next.risks[model.position(id)] = revised;
  auto entry =
      make_entry(stamp, AuditAction::set_enabled, revised.id, to_json(*current), to_json(revised), next.version);
  return {std::move(next), std::move(entry)};
}

ModelEdit<ProjectModel> revise_area(const ProjectModel& model, std::string_view id, const AreaPatch& patch,
                                    const EditStamp& stamp) {
  require_author(stamp);
  const auto* current = model.find(id);
  if (!current) throw Error(Errc::unknown_area, "unknown area \"" + std::string(id) + "\"");

  ProjectArea revised = *current;
  if (patch.name) revised.name = *patch.name;
  if (patch.description) revised.description = *patch.description;
  if (patch.example_question) revised.example_question = *patch.example_question;
  if (patch.required) revised.required = *patch.required;

  ProjectModel next = model;
  next.version = model.version + 1;
  for (auto& a : next.areas)
    if (a.id == id) a = revised;
  // Re-run every invariant on the whole document.
  next = validate_project_model(to_json(next));
  auto entry =
      make_entry(stamp, AuditAction::revise_area, revised.id, to_json(*current), to_json(revised), next.version);
  return {std::move(next), std::move(entry)};
}

// --- diff ----------------------------------------------------------------

ModelDiff diff_models(const RiskModel& a, const RiskModel& b) {
  ModelDiff d;
  for (const auto& rb : b.risks) {
    d.order.push_back(rb.id);
    const auto* ra = a.find(rb.id);
    if (!ra) {
      d.added.push_back(rb);
      continue;
    }
    json ja = to_json(*ra), jb = to_json(rb);
    RiskRevision rev{rb.id, {}};
    for (const auto& [key, value] : jb.items()) {
      if (ja[key] != value) rev.fields.emplace(key, FieldDelta{ja[key], value});
    }
    if (!rev.fields.empty()) d.revised.push_back(std::move(rev));
  }
  for (const auto& ra : a.risks)
    if (!b.find(ra.id)) d.removed.push_back(ra.id);
  return d;
}

std::vector<RiskDefinition> apply_diff(const RiskModel& a, const ModelDiff& diff) {
  std::map<std::string, RiskDefinition> by_id;
  for (const auto& r : a.risks) by_id.emplace(r.id, r);
  for (const auto& id : diff.removed) by_id.erase(id);
  for (const auto& r : diff.added) by_id[r.id] = r;
  for (const auto& rev : diff.revised) {
    auto it = by_id.find(rev.id);
    if (it == by_id.end()) throw Error(Errc::unknown_risk, "diff revises unknown risk \"" + rev.id + "\"");
    json j = to_json(it->second);
    for (const auto& [field, delta] : rev.fields) j[field] = delta.after;
    it->second = validate_risk_definition(j);
  }
  std::vector<RiskDefinition> out;
  for (const auto& id : diff.order) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(Errc::unknown_risk, "diff orders unknown risk \"" + id + "\"");
    out.push_back(it->second);
  }
  return out;
}

json to_json(const ModelDiff& d) {
  json added = json::array();
  for (const auto& r : d.added) added.push_back(to_json(r));
  json revised = json::object();
  for (const auto& rev : d.revised) {
    json fields = json::object();
    for (const auto& [name, delta] : rev.fields) fields[name] = {{"before", delta.before}, {"after", delta.after}};
    revised[rev.id] = std::move(fields);
  }
  return json{{"added", std::move(added)}, {"removed", d.removed}, {"revised", std::move(revised)}, {"order", d.order}};
}

// --- audit log -----------------------------------------------------------

void AuditLog::append(AuditEntry entry) {
  if (!entries_.empty() && entry.seq <= entries_.back().seq) {
    throw ValidationError(std::vector<FieldError>{{"seq", "audit seq " + std::to_string(entry.seq) + " does not follow " +
                                       std::to_string(entries_.back().seq)}});
  }
  entries_.push_back(std::move(entry));
}

std::string AuditLog::to_ndjson() const {
  std::string out;
  for (const auto& e : entries_) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

AuditLog AuditLog::from_ndjson(std::string_view text) {
  AuditLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::vector<FieldError>{{"audit[" + std::to_string(log.size()) + "]", e.what()}});
    }
    log.append(audit_entry_from_json(doc));
  }
  return log;
}

}  // namespace coach
