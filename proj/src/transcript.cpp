#include "coach/transcript.hpp"

#include <fstream>
#include <sstream>

#include "coach/error.hpp"

namespace coach {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
}

}  // namespace

TranscriptFixture transcript_from_json(const json& doc) {
  std::vector<FieldError> errors;
  TranscriptFixture t;
  if (!doc.is_object()) throw ValidationError(std::vector<FieldError>{{"", "expected object"}});
  if (doc.contains("novice_id") && doc["novice_id"].is_string()) {
    t.novice_id = doc["novice_id"].get<std::string>();
  } else {
    errors.push_back({"novice_id", "expected string"});
  }
  if (doc.contains("answers") && doc["answers"].is_object()) {
    for (const auto& [id, list] : doc["answers"].items()) {
      if (!list.is_array()) {
        errors.push_back({"answers." + id, "expected list of strings"});
        continue;
      }
      for (const auto& a : list) {
        if (!a.is_string()) {
          errors.push_back({"answers." + id, "expected list of strings"});
          break;
        }
        t.answers[id].push_back(a.get<std::string>());
      }
    }
  } else {
    errors.push_back({"answers", "expected object"});
  }
  if (doc.contains("mentor_goals") && !doc["mentor_goals"].is_null()) {
    const auto& g = doc["mentor_goals"];
    try {
      t.mentor_goals.emplace(g.value("focus_risk_ids", std::vector<std::string>{}),
                             g.value("desired_outcomes", std::string()));
    } catch (const json::exception& e) {
      errors.push_back({"mentor_goals", e.what()});
    }
  }
  if (doc.contains("agenda") && doc["agenda"].is_object()) {
    try {
      t.selected = doc["agenda"].value("selected", std::vector<std::string>{});
      t.notes = doc["agenda"].value("notes", std::string());
    } catch (const json::exception& e) {
      errors.push_back({"agenda", e.what()});
    }
  } else {
    errors.push_back({"agenda", "expected object"});
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return t;
}

TranscriptFixture load_transcript(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw ValidationError(std::vector<FieldError>{{"transcript", path.string() + " is not valid JSON"}});
  return transcript_from_json(doc);
}

RunResult run_session(CoachService& service, const TranscriptFixture& fixture) {
  std::map<std::string, std::size_t> used;
  auto turn = service.create_session(fixture.novice_id);
  const std::string id = turn.bundle.session.id;
  Session s = turn.bundle.session;

  while (s.phase == Phase::eliciting || s.phase == Phase::reflecting) {
    const auto pending = pending_question(s);
    if (!pending) throw Error(Errc::wrong_phase, "session " + id + " is waiting without a question");
    const std::string target = pending->area_id ? *pending->area_id : pending->risk_id.value_or("");
    auto it = fixture.answers.find(target);
    auto& n = used[target];
    if (it == fixture.answers.end() || n >= it->second.size()) {
      throw Error(Errc::missing_answer, "transcript has no answer left for \"" + target + "\"");
    }
    s = service.post_message(id, it->second[n++]).bundle.session;
  }

  if (fixture.mentor_goals) service.set_goals(id, fixture.mentor_goals->first, fixture.mentor_goals->second);
  RunResult r;
  r.bundle = service.set_agenda(id, fixture.selected, fixture.notes);
  r.novice = service.novice_dashboard(id);
  r.mentor = service.mentor_dashboard(id);
  return r;
}

void write_run_outputs(const RunResult& result, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "novice_dashboard.json", to_json(result.novice).dump(2) + "\n");
  write_file(dir / "novice_dashboard.txt", render_export(result.novice));
  write_file(dir / "mentor_dashboard.json", to_json(result.mentor).dump(2) + "\n");
  write_file(dir / "mentor_dashboard.txt", render_export(result.mentor));
  if (result.bundle.agenda_document) {
    write_file(dir / "agenda.json", to_json(*result.bundle.agenda_document).dump(2) + "\n");
    write_file(dir / "agenda.txt", render_agenda_text(*result.bundle.agenda_document));
  }
  write_file(dir / "session.json", to_json(result.bundle.session).dump(2) + "\n");
}

Timestamp reproducible_epoch() { return parse_timestamp("2025-01-01T09:00:00.000Z"); }

}  // namespace coach
