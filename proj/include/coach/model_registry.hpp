#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coach/util.hpp"

namespace coach {

using json = nlohmann::ordered_json;

// A topic the novice should articulate before a coaching meeting.
struct ProjectArea {
  std::string id;
  std::string name;
  std::string description;
  std::string example_question;
  int order = 0;
  bool required = true;

  bool operator==(const ProjectArea&) const = default;
};

struct ProjectModel {
  std::int64_t version = 1;
  std::vector<ProjectArea> areas;  // sorted by order

  const ProjectArea* find(std::string_view id) const;
  bool operator==(const ProjectModel&) const = default;
};

// A named design risk expressed as an if/then statement.
struct RiskDefinition {
  std::string id;
  std::string name;
  std::string description;
  std::vector<std::string> examples;
  bool enabled = true;
  std::string created_by;
  std::int64_t revision = 0;

  bool operator==(const RiskDefinition&) const = default;
};

struct RiskModel {
  std::int64_t version = 1;
  std::vector<RiskDefinition> risks;

  const RiskDefinition* find(std::string_view id) const;
  bool is_enabled(std::string_view id) const;
  // Position of `id` in model order, or risks.size() when absent.
  std::size_t position(std::string_view id) const;
  std::vector<const RiskDefinition*> enabled_risks() const;

  bool operator==(const RiskModel&) const = default;
};

enum class AuditAction { add_risk, revise_risk, set_enabled, revise_area };

std::string_view to_string(AuditAction a);
AuditAction audit_action_from_string(std::string_view s);

struct AuditEntry {
  std::int64_t seq = 0;
  Timestamp timestamp{};
  std::string author;
  AuditAction action = AuditAction::add_risk;
  std::string target_id;
  json before;  // null when the target did not exist
  json after;
  std::int64_t model_version = 0;  // model version produced by the edit

  bool operator==(const AuditEntry&) const = default;
};

// Who made an edit, when, and which audit sequence number it takes.
struct EditStamp {
  std::string author;
  std::int64_t seq = 0;
  Timestamp timestamp{};
};

template <typename Model>
struct ModelEdit {
  Model model;
  AuditEntry entry;
};

// The combined expert knowledge that governs the system's reasoning.
struct CoachingModel {
  ProjectModel project;
  RiskModel risk;
};

// The seeded coaching knowledge: seven project areas and eleven risks.
CoachingModel seed_default_models();

// Slug ids of the seeded areas referenced elsewhere in the engine.
inline constexpr std::string_view kEmotionsAreaId = "emotions";

// --- serialization -------------------------------------------------------

json to_json(const ProjectArea& a);
json to_json(const ProjectModel& m);
json to_json(const RiskDefinition& r);
json to_json(const RiskModel& m);
json to_json(const AuditEntry& e);

enum class ModelKind { project, risk };

ModelKind model_kind_from_string(std::string_view s);

// Check a parsed document against every model invariant. Throws
// ValidationError listing all (path, message) problems found.
ProjectModel validate_project_model(const json& document);
RiskModel validate_risk_model(const json& document);
RiskDefinition validate_risk_definition(const json& document, std::string_view path = "risk");
AuditEntry audit_entry_from_json(const json& document);

// --- edits ---------------------------------------------------------------
// All edits are pure: they return a new model value and the audit entry that
// records the change.

struct RiskPatch {
  std::optional<std::string> name;
  std::optional<std::string> description;
  std::optional<std::vector<std::string>> examples;
  std::optional<bool> enabled;

  bool empty() const { return !name && !description && !examples && !enabled; }
};

RiskPatch risk_patch_from_json(const json& document);

struct AreaPatch {
  std::optional<std::string> name;
  std::optional<std::string> description;
  std::optional<std::string> example_question;
  std::optional<bool> required;
};

AreaPatch area_patch_from_json(const json& document);

// New risk id derived from its name when `def.id` is empty.
ModelEdit<RiskModel> add_risk(const RiskModel& model, RiskDefinition def, const EditStamp& stamp);
ModelEdit<RiskModel> revise_risk(const RiskModel& model, std::string_view id, const RiskPatch& patch,
                                 const EditStamp& stamp);
ModelEdit<RiskModel> set_enabled(const RiskModel& model, std::string_view id, bool enabled,
                                 const EditStamp& stamp);
ModelEdit<ProjectModel> revise_area(const ProjectModel& model, std::string_view id, const AreaPatch& patch,
                                    const EditStamp& stamp);

// --- diff ----------------------------------------------------------------

struct FieldDelta {
  json before;
  json after;

  bool operator==(const FieldDelta&) const = default;
};

struct RiskRevision {
  std::string id;
  std::map<std::string, FieldDelta> fields;

  bool operator==(const RiskRevision&) const = default;
};

struct ModelDiff {
  std::vector<RiskDefinition> added;
  std::vector<std::string> removed;
  std::vector<RiskRevision> revised;
  // Target ordering of ids, so the diff reproduces b's list exactly.
  std::vector<std::string> order;

  bool empty() const { return added.empty() && removed.empty() && revised.empty(); }
};

ModelDiff diff_models(const RiskModel& a, const RiskModel& b);
// Applies a change set produced by diff_models(a, b) to `a`, yielding b's risks.
std::vector<RiskDefinition> apply_diff(const RiskModel& a, const ModelDiff& diff);
json to_json(const ModelDiff& d);

// --- audit log -----------------------------------------------------------

// Append-only sequence of audit entries, serialized one record per line.
class AuditLog {
 public:
  AuditLog() = default;

  std::int64_t next_seq() const { return entries_.empty() ? 0 : entries_.back().seq + 1; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<AuditEntry>& entries() const { return entries_; }

  // Throws Error(validation) if the entry's seq does not follow the last one.
  void append(AuditEntry entry);

  std::string to_ndjson() const;
  static AuditLog from_ndjson(std::string_view text);

 private:
  std::vector<AuditEntry> entries_;
};

}  // namespace coach
