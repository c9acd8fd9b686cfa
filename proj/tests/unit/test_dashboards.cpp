#include <doctest.h>

#include <set>

#include "coach/dashboards.hpp"
#include "coach/error.hpp"
#include "testkit.hpp"

using namespace coach;

namespace {

Session elicit_with_emotions(const SessionEngine& eng, const CoachingModel& m, const std::string& emotions) {
  auto s = eng.create_session("novice-a", m.project, m.risk);
  while (s.phase == Phase::eliciting) {
    if (!pending_question(s)) s = eng.ask_area_question(s, m.project, "Next?");
    const auto area = *pending_question(s)->area_id;
    s = eng.record_novice_message(s, m.project, area == "emotions" ? emotions : "A long enough answer about " + area);
  }
  return s;
}

Session complete(const SessionEngine& eng, const CoachingModel& m, const std::vector<std::string>& diagnosed,
                 const std::vector<std::string>& selected, const std::string& notes = "") {
  auto s = elicit_with_emotions(eng, m, "nervous about launch");
  const auto seq = testkit::first_novice_seq(s);
  s = eng.attach_context(s, m.project,
                         {{"project-information", "Problem", "Artists cannot find fairs", seq}});
  std::vector<Diagnosis> ds;
  for (const auto& id : diagnosed) ds.push_back(testkit::diag(id, seq));
  s = eng.attach_diagnoses(s, m.project, m.risk, ds);
  while (s.phase == Phase::reflecting) {
    s = eng.ask_reflection(s, {"What do you know?", "What else?"});
    s = eng.record_novice_message(s, m.project, "Reflection answer.");
  }
  return eng.set_agenda(s, selected, notes);
}

}  // namespace

TEST_CASE("novice dashboard lists the complement of the diagnoses") {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  const auto s = complete(eng, m, {"testing"}, {"testing"});
  const auto d = build_novice_dashboard(s, m);
  REQUIRE(d.risk_reports.size() == 1);
  CHECK(d.risk_reports[0].risk_id == "testing");
  CHECK(d.risk_reports[0].explanation.find(m.risk.find("testing")->description) == 0);
  CHECK(d.risk_reports[0].explanation.find("Because the novice said so.") != std::string::npos);
  CHECK(d.risk_reports[0].followups == std::vector<std::string>{"What else?"});
  CHECK(d.other_model_risks.size() == 10);
  for (const auto& r : d.other_model_risks) CHECK(r.risk_id != "testing");
  CHECK(d.other_model_risks.front().risk_id == "communicate-with-customers");
}

TEST_CASE("no diagnoses: every risk is an other risk") {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  const auto s = complete(eng, m, {}, {});
  const auto d = build_novice_dashboard(s, m);
  CHECK(d.risk_reports.empty());
  CHECK(d.other_model_risks.size() == 11);
}

TEST_CASE("dashboards need the right phase") {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  const auto early = eng.create_session("n", m.project, m.risk);
  CHECK_THROWS_AS(build_novice_dashboard(early, m), Error);
  const auto prio = testkit::to_prioritizing(eng, m, {"testing"});
  CHECK_NOTHROW(build_novice_dashboard(prio, m));
  try {
    build_mentor_dashboard(prio, m, std::nullopt, {});
    FAIL("expected wrong_phase");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::wrong_phase);
  }
}

TEST_CASE("mentor dashboard shows the partition with rationales") {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  const auto s = complete(eng, m, {"testing", "planning"}, {"testing"});
  const auto d = build_mentor_dashboard(s, m, std::nullopt, {});
  REQUIRE(d.selected_risks.size() == 1);
  CHECK(d.selected_risks[0].risk_id == "testing");
  REQUIRE(d.omitted_risks.size() == 1);
  CHECK(d.omitted_risks[0].risk_id == "planning");
  CHECK(d.omitted_risks[0].rationale == "Because the novice said so.");
  CHECK_FALSE(d.mentor_goals);
  CHECK(d.emotions_excerpt == "nervous about launch");
  CHECK(d.transcript_ref == "/v1/sessions/" + s.id + "#transcript");
  CHECK(d.novice_id == "novice-a");
}

TEST_CASE("role asymmetry in the serialized views") {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  const auto s = complete(eng, m, {"testing"}, {"testing"});
  const auto novice = to_json(build_novice_dashboard(s, m));
  CHECK_FALSE(novice.contains("mentor_goals"));
  CHECK_FALSE(novice.contains("strategies"));
  CHECK(novice.dump().find("nervous about launch") == std::string::npos);
  StrategySuggestion st{"testing", {"What would you measure?"}, {"No metric chosen"}, "R", "h"};
  const auto mentor = to_json(build_mentor_dashboard(s, m, MentorGoals{s.id, {"testing"}, "Pick a metric", {}}, {st}));
  CHECK(mentor.contains("mentor_goals"));
  CHECK(mentor["strategies"].size() == 1);
  CHECK(mentor["omitted_risks"].is_array());
}

TEST_CASE("thin context is flagged on both views") {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  auto s = complete(eng, m, {"testing"}, {"testing"});
  s.thin_context = {"obstacles"};
  CHECK(build_novice_dashboard(s, m).thin_context_flags == std::vector<std::string>{"obstacles"});
  const auto md = build_mentor_dashboard(s, m, std::nullopt, {});
  CHECK(md.thin_context_flags == std::vector<std::string>{"obstacles"});
  const auto text = render_export(md);
  CHECK(text.find("== Thin Context ==\n- obstacles") != std::string::npos);
  CHECK(text.find("== Thin Context ==") < text.find("== Project Summary =="));
}

TEST_CASE("exports keep every section, marking empty ones") {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  const auto s = complete(eng, m, {"testing", "planning"}, {"planning"}, "");
  const auto mentor = render_export(build_mentor_dashboard(s, m, std::nullopt, {}));
  std::size_t at = 0;
  for (const auto* h : {"== Thin Context ==", "== Project Summary ==", "== Selected Risks ==", "== Unselected Risks ==",
                        "== Emotions ==", "== Mentor Goals ==", "== Strategies ==", "== Notes ==", "== Transcript =="}) {
    const auto pos = mentor.find(h, at);
    CHECK_MESSAGE(pos != std::string::npos, h);
    at = pos;
  }
  CHECK(mentor.find("== Notes ==\n(empty)") != std::string::npos);

  const auto novice = render_export(build_novice_dashboard(s, m));
  at = 0;
  for (const auto* h : {"== Project Summary ==", "== Thin Context ==", "== Risk Reports ==",
                        "== Other Risks in the Model ==", "== Agenda ==", "== Notes =="}) {
    const auto pos = novice.find(h, at);
    CHECK_MESSAGE(pos != std::string::npos, h);
    at = pos;
  }
  CHECK(novice.find("== Notes ==\n(empty)") != std::string::npos);
}

TEST_CASE("building is pure") {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  const auto s = complete(eng, m, {"testing", "planning"}, {"planning"}, "n");
  CHECK(to_json(build_mentor_dashboard(s, m, std::nullopt, {})).dump() ==
        to_json(build_mentor_dashboard(s, m, std::nullopt, {})).dump());
  CHECK(render_export(build_novice_dashboard(s, m)) == render_export(build_novice_dashboard(s, m)));
}

TEST_CASE("project summary groups context by area") {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  const auto s = complete(eng, m, {"testing"}, {"testing"});
  const auto d = build_novice_dashboard(s, m);
  REQUIRE_FALSE(d.project_summary.empty());
  CHECK(d.project_summary[0].area_id == "project-information");
  REQUIRE(d.project_summary[0].entries.size() == 1);
  CHECK(d.project_summary[0].entries[0].second == "Artists cannot find fairs");
  for (const auto& a : d.project_summary) CHECK(a.area_id != "emotions");
}
