#include <doctest.h>

#include <algorithm>
#include <set>

#include "coach/error.hpp"
#include "coach/model_registry.hpp"
#include "testkit.hpp"

using namespace coach;

namespace {

EditStamp stamp(std::int64_t seq) { return {"mentor-1", seq, parse_timestamp("2025-02-01T10:00:00.000Z")}; }

RiskDefinition teamwork_alignment() {
  RiskDefinition d;
  d.id = "teamwork-alignment";
  d.name = "Teamwork alignment";
  d.description =
      "If co-founders are pursuing separate ideas, there is a risk that the team builds two half products.";
  d.examples = {"The co-founders were pursuing separate ideas."};
  return d;
}

template <typename F>
std::vector<FieldError> validation_errors(F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.errors();
  }
  return {};
}

bool mentions(const std::vector<FieldError>& errs, const std::string& needle) {
  return std::any_of(errs.begin(), errs.end(), [&](const FieldError& e) {
    return e.message.find(needle) != std::string::npos || e.path.find(needle) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("seeded models follow the appendix tables") {
  const auto m = seed_default_models();
  REQUIRE(m.project.areas.size() == 7);
  REQUIRE(m.risk.risks.size() == 11);

  const std::vector<std::string> areas = {"Project information", "Current Focus", "Learning", "Obstacles",
                                          "Plan", "Coaching outcome", "Emotions"};
  for (std::size_t i = 0; i < areas.size(); ++i) {
    CHECK(m.project.areas[i].name == areas[i]);
    CHECK(m.project.areas[i].order == static_cast<int>(i));
  }
  const auto* focus = m.project.find("current-focus");
  REQUIRE(focus);
  CHECK(focus->example_question.rfind("What specific aspects of your venture are you currently focusing on?", 0) == 0);
  CHECK_FALSE(m.project.find("emotions")->required);

  const std::vector<std::string> risks = {"Communicate with customers", "Customers and needs",
                                          "Distribution channels", "Existing solutions",
                                          "Identify risky assumptions", "Perfectionism",
                                          "Planning", "Raising capital", "Teamwork", "Testing",
                                          "Value propositions"};
  for (std::size_t i = 0; i < risks.size(); ++i) {
    CHECK(m.risk.risks[i].name == risks[i]);
    CHECK(m.risk.risks[i].enabled);
    CHECK(m.risk.risks[i].revision == 0);
  }
  const auto* dist = m.risk.find("distribution-channels");
  REQUIRE(dist);
  CHECK(dist->description.find("never goes into customers' hands") != std::string::npos);
}

TEST_CASE("seeded documents validate") {
  const auto m = seed_default_models();
  CHECK(validate_project_model(to_json(m.project)) == m.project);
  CHECK(validate_risk_model(to_json(m.risk)) == m.risk);
}

TEST_CASE("validation rejects duplicate risk ids") {
  auto doc = to_json(seed_default_models().risk);
  doc["risks"][0]["id"] = "testing";
  const auto errs = validation_errors([&] { validate_risk_model(doc); });
  REQUIRE_FALSE(errs.empty());
  CHECK(mentions(errs, "duplicate"));
}

TEST_CASE("validation rejects a bad order permutation") {
  auto doc = to_json(seed_default_models().project);
  doc["areas"][1]["order"] = 0;
  const auto errs = validation_errors([&] { validate_project_model(doc); });
  REQUIRE_FALSE(errs.empty());
  CHECK(mentions(errs, "order"));
}

TEST_CASE("validation reports every problem with its path") {
  auto doc = to_json(seed_default_models().risk);
  doc["risks"][2].erase("name");
  doc["risks"][4]["description"] = "";
  doc["risks"][5]["id"] = "Not A Slug";
  const auto errs = validation_errors([&] { validate_risk_model(doc); });
  CHECK(errs.size() >= 3);
  CHECK(mentions(errs, "risks[2]"));
  CHECK(mentions(errs, "risks[4]"));
  CHECK(mentions(errs, "risks[5]"));
}

TEST_CASE("risk descriptions must state a risk") {
  auto doc = to_json(seed_default_models().risk);
  doc["risks"][0]["description"] = "Customers are nice.";
  CHECK_THROWS_AS(validate_risk_model(doc), ValidationError);
}

TEST_CASE("area fields are required") {
  auto doc = to_json(seed_default_models().project);
  doc["areas"][0]["example_question"] = "";
  CHECK_THROWS_AS(validate_project_model(doc), ValidationError);
  doc = to_json(seed_default_models().project);
  doc["areas"] = json::array();
  CHECK_THROWS_AS(validate_project_model(doc), ValidationError);
}

TEST_CASE("add_risk bumps the version and records an audit entry") {
  const auto seeded = seed_default_models().risk;
  const auto edit = add_risk(seeded, teamwork_alignment(), stamp(0));
  CHECK(edit.model.version == seeded.version + 1);
  CHECK(edit.model.risks.size() == 12);
  CHECK(edit.model.find("teamwork-alignment")->revision == 0);
  CHECK(edit.model.find("teamwork-alignment")->created_by == "mentor-1");
  CHECK(edit.entry.action == AuditAction::add_risk);
  CHECK(edit.entry.target_id == "teamwork-alignment");
  CHECK(edit.entry.before.is_null());
  CHECK(edit.entry.model_version == edit.model.version);
  CHECK(validate_risk_model(to_json(edit.model)) == edit.model);
}

TEST_CASE("add_risk rejects an existing id") {
  auto def = teamwork_alignment();
  def.id = "planning";
  try {
    add_risk(seed_default_models().risk, def, stamp(0));
    FAIL("expected duplicate_id");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::duplicate_id);
  }
}

TEST_CASE("add_risk derives the id from the name") {
  auto def = teamwork_alignment();
  def.id.clear();
  def.name = "Team Alignment!";
  const auto edit = add_risk(seed_default_models().risk, def, stamp(0));
  CHECK(edit.model.find("team-alignment"));
}

TEST_CASE("revise_risk bumps revision and keeps before/after") {
  const auto seeded = seed_default_models().risk;
  RiskPatch patch;
  patch.description =
      "If the novice does not decide what to test, how to test it and with whom, there is a risk that tests "
      "produce no usable evidence.";
  const auto edit = revise_risk(seeded, "testing", patch, stamp(0));
  CHECK(edit.model.find("testing")->revision == 1);
  CHECK(edit.model.version == seeded.version + 1);
  CHECK(edit.entry.before == to_json(*seeded.find("testing")));
  CHECK(edit.entry.after == to_json(*edit.model.find("testing")));
}

TEST_CASE("revise_risk on an unknown id fails") {
  RiskPatch patch;
  patch.name = "Pricing";
  try {
    revise_risk(seed_default_models().risk, "pricing", patch, stamp(0));
    FAIL("expected unknown_risk");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unknown_risk);
  }
}

TEST_CASE("sequential revisions chain in the audit log") {
  auto model = seed_default_models().risk;
  AuditLog log;
  RiskPatch p1, p2;
  p1.name = "Testing depth";
  p2.name = "Testing quality";
  auto e1 = revise_risk(model, "testing", p1, stamp(log.next_seq()));
  log.append(e1.entry);
  auto e2 = revise_risk(e1.model, "testing", p2, stamp(log.next_seq()));
  const auto before = log.to_ndjson();
  log.append(e2.entry);
  CHECK(log.entries()[1].seq == log.entries()[0].seq + 1);
  CHECK(log.entries()[1].before == log.entries()[0].after);
  CHECK(log.to_ndjson().rfind(before, 0) == 0);
  CHECK(log.to_ndjson().size() > before.size());
  CHECK(AuditLog::from_ndjson(log.to_ndjson()).entries() == log.entries());
}

TEST_CASE("audit log rejects out-of-order entries") {
  AuditLog log;
  auto e = add_risk(seed_default_models().risk, teamwork_alignment(), stamp(0)).entry;
  log.append(e);
  CHECK_THROWS_AS(log.append(e), Error);
}

TEST_CASE("set_enabled disables without deleting") {
  const auto edit = set_enabled(seed_default_models().risk, "perfectionism", false, stamp(0));
  CHECK(edit.model.risks.size() == 11);
  CHECK_FALSE(edit.model.is_enabled("perfectionism"));
  CHECK(edit.model.enabled_risks().size() == 10);
  CHECK(edit.entry.action == AuditAction::set_enabled);
}

TEST_CASE("revise_area edits the question and bumps the project version") {
  const auto project = seed_default_models().project;
  AreaPatch patch;
  patch.example_question = "What is the one thing you are working on this week?";
  const auto edit = revise_area(project, "current-focus", patch, stamp(0));
  CHECK(edit.model.version == project.version + 1);
  CHECK(edit.model.find("current-focus")->example_question == *patch.example_question);
  CHECK(edit.entry.action == AuditAction::revise_area);
  CHECK_THROWS_AS(revise_area(project, "budget", patch, stamp(0)), Error);
}

TEST_CASE("diff of a model with itself is empty") {
  const auto m = seed_default_models().risk;
  CHECK(diff_models(m, m).empty());
}

TEST_CASE("diff finds an added risk") {
  const auto a = seed_default_models().risk;
  const auto b = add_risk(a, teamwork_alignment(), stamp(0)).model;
  const auto d = diff_models(a, b);
  // Oracle: set difference over ids.
  std::set<std::string> ids_a, ids_b;
  for (const auto& r : a.risks) ids_a.insert(r.id);
  for (const auto& r : b.risks) ids_b.insert(r.id);
  std::vector<std::string> expected;
  std::set_difference(ids_b.begin(), ids_b.end(), ids_a.begin(), ids_a.end(), std::back_inserter(expected));
  REQUIRE(d.added.size() == expected.size());
  CHECK(d.added[0].id == expected[0]);
  CHECK(d.removed.empty());
  CHECK(d.revised.empty());
  CHECK(apply_diff(a, d) == b.risks);
}

TEST_CASE("diff reports field deltas for a revision") {
  const auto a = seed_default_models().risk;
  RiskPatch patch;
  patch.description = "If testing lacks depth, there is a risk of false confidence.";
  const auto b = revise_risk(a, "testing", patch, stamp(0)).model;
  const auto d = diff_models(a, b);
  REQUIRE(d.revised.size() == 1);
  CHECK(d.revised[0].id == "testing");
  // Field-wise oracle.
  const auto ja = to_json(*a.find("testing")), jb = to_json(*b.find("testing"));
  std::set<std::string> changed;
  for (const auto& [k, v] : jb.items())
    if (ja[k] != v) changed.insert(k);
  std::set<std::string> reported;
  for (const auto& [k, _] : d.revised[0].fields) reported.insert(k);
  CHECK(reported == changed);
  CHECK(d.revised[0].fields.at("description").after == *patch.description);
  CHECK(apply_diff(a, d) == b.risks);
}

TEST_CASE("slugify") {
  CHECK(slugify("Teamwork Alignment") == "teamwork-alignment");
  CHECK(slugify("  Risky -- assumptions?! ") == "risky-assumptions");
  CHECK(is_slug("value-propositions"));
  CHECK_FALSE(is_slug("Value"));
  CHECK_FALSE(is_slug(""));
}
