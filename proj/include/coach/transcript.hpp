#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coach/dashboards.hpp"
#include "coach/service.hpp"

namespace coach {

// Non-interactive stand-in for a novice (and optionally a mentor):
//
//   {
//     "novice_id": "artist-01",
//     "answers": {"project-information": ["..."], "testing": ["..."]},
//     "mentor_goals": {"focus_risk_ids": [...], "desired_outcomes": "..."},
//     "agenda": {"selected": ["testing"], "notes": "..."}
//   }
//
// `answers` maps an area id (area questions) or a risk id (reflection
// questions) to the novice's replies in the order they are given.
struct TranscriptFixture {
  std::string novice_id;
  std::map<std::string, std::vector<std::string>> answers;
  std::optional<std::pair<std::vector<std::string>, std::string>> mentor_goals;
  std::vector<std::string> selected;
  std::string notes;
};

TranscriptFixture transcript_from_json(const json& doc);
TranscriptFixture load_transcript(const std::filesystem::path& path);

struct RunResult {
  SessionBundle bundle;
  NoviceDashboard novice;
  MentorDashboard mentor;
};

// Answers every question the service asks from the fixture, sets goals and
// the agenda. Throws Error(missing_answer) when the fixture runs out.
RunResult run_session(CoachService& service, const TranscriptFixture& fixture);

// Writes novice_dashboard.{json,txt}, mentor_dashboard.{json,txt},
// agenda.{json,txt} and session.json into `dir`.
void write_run_outputs(const RunResult& result, const std::filesystem::path& dir);

// Start of the deterministic clock used by reproducible runs.
Timestamp reproducible_epoch();

}  // namespace coach
