// Acceptance run: one PASS/FAIL line per primary criterion.
//
// Tolerances are fixed here, not tuned per run:
//   seed fidelity       exact text match, under 1 s
//   e2e determinism     5 runs byte-identical to the goldens, under 10 s total, zero socket attempts
//   oracle equivalence  200 random contexts, exact match
//   containment         1000 adversarial outputs, 0 escapes, 0 crashes; 10/10 wrappers recovered
//   agenda partition    500 random cases, exact partition
//   authoring           100 random edit sequences, exact round trip
//   store durability    100 killed writers, every record old-or-new and readable
//   role wall           every route x role matches the expected matrix
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>

#include "coach/api.hpp"
#include "coach/error.hpp"
#include "coach/pipeline.hpp"
#include "coach/prompts.hpp"
#include "coach/structured.hpp"
#include "testkit.hpp"

using namespace coach;
namespace fs = std::filesystem;
using Clk = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
  if (!ok) ++failures;
}

double seconds_since(Clk::time_point t0) { return std::chrono::duration<double>(Clk::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

class FnBackend : public Backend {
 public:
  explicit FnBackend(std::function<std::string(const CompletionRequest&)> fn) : fn_(std::move(fn)) {}
  CompletionResponse complete(const CompletionRequest& r) override { return {fn_(r), id(), {}, false}; }
  std::string id() const override { return "fn"; }

 private:
  std::function<std::string(const CompletionRequest&)> fn_;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

// --- 1 ---------------------------------------------------------------------

void seed_fidelity() {
  const auto t0 = Clk::now();
  const auto tables = testkit::read_json(testkit::fixtures() / "seed_tables.json");
  const auto m = seed_default_models();
  int mismatches = 0;
  const auto& areas = tables["areas"];
  const auto& risks = tables["risks"];
  if (areas.size() != m.project.areas.size() || risks.size() != m.risk.risks.size()) ++mismatches;
  for (std::size_t i = 0; i < std::min(areas.size(), m.project.areas.size()); ++i) {
    const auto& a = m.project.areas[i];
    if (areas[i]["name"] != a.name || areas[i]["description"] != a.description ||
        areas[i]["example_question"] != a.example_question)
      ++mismatches;
  }
  for (std::size_t i = 0; i < std::min(risks.size(), m.risk.risks.size()); ++i) {
    const auto& r = m.risk.risks[i];
    if (risks[i]["name"] != r.name || risks[i]["description"] != r.description || !r.enabled) ++mismatches;
  }
  const double s = seconds_since(t0);
  report(mismatches == 0 && s < 1.0, "seed-fidelity",
         std::to_string(m.project.areas.size()) + " areas, " + std::to_string(m.risk.risks.size()) + " risks, " +
             std::to_string(mismatches) + " mismatches, " + fmt(s) + "s (limit 1s)");
}

// --- 2 ---------------------------------------------------------------------

void e2e_determinism() {
  testkit::TempDir dir;
  const auto fx = testkit::fixtures() / "artist_fair";
  const auto log = dir.path() / "net.log";
  const std::vector<std::string> files = {"novice_dashboard.json", "novice_dashboard.txt", "mentor_dashboard.json",
                                          "mentor_dashboard.txt",  "agenda.json",          "agenda.txt"};
  int identical = 0;
  const auto t0 = Clk::now();
  for (int i = 0; i < 5; ++i) {
    const auto out = dir.path() / ("run" + std::to_string(i));
    const std::string cmd = "LD_PRELOAD=" + quote(COACH_NONET_PATH) + " COACH_NONET_LOG=" + quote(log.string()) + " " +
                            quote(COACHCTL_PATH) + " run-session --transcript " +
                            quote((fx / "transcript.json").string()) + " --backend " +
                            quote("scripted:" + (fx / "script.json").string()) + " --out " + quote(out.string()) +
                            " >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) continue;
    bool same = true;
    for (const auto& f : files) same = same && testkit::read_file(out / f) == testkit::read_file(fx / "golden" / f);
    identical += same;
  }
  const double s = seconds_since(t0);
  const bool quiet = !fs::exists(log);
  report(identical == 5 && s < 10.0 && quiet, "e2e-determinism",
         std::to_string(identical) + "/5 runs byte-identical to goldens, " + fmt(s) + "s (limit 10s), " +
             (quiet ? "0 socket attempts" : "socket attempts logged"));
}

// --- 3 ---------------------------------------------------------------------

// Keywords per risk, lower case, matched as substrings of a context value.
const std::vector<std::pair<std::string, std::vector<std::string>>>& oracle_keywords() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> k = {
      {"raising-capital", {"investor", "venture capital", "fundrais"}},
      {"perfectionism", {"polish", "perfect", "not ready"}},
      {"teamwork", {"co-founder", "cofounder", "teammate"}},
      {"existing-solutions", {"competitor", "existing app"}},
      {"distribution-channels", {"launch", "sign up", "reach"}},
      {"testing", {"metric", "survey", "pilot"}},
      {"identify-risky-assumptions", {"assume", "assumption"}},
      {"communicate-with-customers", {"brand", "message"}},
      {"customers-and-needs", {"everyone", "all people"}},
      {"planning", {"busy", "many tasks"}},
      {"value-propositions", {"better than", "solves"}},
  };
  return k;
}

std::vector<std::pair<std::string, std::vector<std::int64_t>>> oracle_diagnose(const RiskModel& risk,
                                                                                const std::vector<ContextEntry>& ctx) {
  std::map<std::string, std::set<std::int64_t>> hits;
  for (const auto& e : ctx) {
    if (e.area_id == "emotions") continue;
    const auto v = to_lower(e.value);
    for (const auto& [id, words] : oracle_keywords()) {
      for (const auto& w : words) {
        if (v.find(w) != std::string::npos) hits[id].insert(e.source_seq);
      }
    }
  }
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> out;
  for (const auto& r : risk.risks) {
    if (!r.enabled || !hits.count(r.id)) continue;
    out.push_back({r.id, {hits[r.id].begin(), hits[r.id].end()}});
  }
  return out;
}

void oracle_equivalence() {
  RuleMockBackend mock(testkit::read_json(testkit::fixtures() / "mock_tables.json"));
  const auto base = seed_default_models();
  std::mt19937 rng(2025);
  const std::vector<std::string> filler = {"we",   "plan",  "the",   "app",   "market", "users", "idea",
                                           "next", "month", "maybe", "store", "price",  "fair",  "art"};
  std::vector<std::string> keywords;
  for (const auto& [_, words] : oracle_keywords()) keywords.insert(keywords.end(), words.begin(), words.end());
  std::vector<std::string> areas;
  for (const auto& a : base.project.areas)
    if (a.id != "emotions") areas.push_back(a.id);

  int agree = 0, nonempty = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    auto model = base;
    for (auto& r : model.risk.risks) r.enabled = rng() % 4 != 0;
    std::vector<ContextEntry> ctx;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      std::string value;
      const int words = 2 + static_cast<int>(rng() % 6);
      for (int w = 0; w < words; ++w) {
        if (!value.empty()) value += ' ';
        value += rng() % 4 == 0 ? keywords[rng() % keywords.size()] : filler[rng() % filler.size()];
      }
      if (rng() % 3 == 0) value[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(value[0])));
      ctx.push_back({areas[rng() % areas.size()], "Note " + std::to_string(i), value, 2 * i + 2});
    }
    Gateway gw(mock, stepping_clock(reproducible_epoch()));
    Pipeline p(gw, stepping_clock(reproducible_epoch()));
    std::vector<std::pair<std::string, std::vector<std::int64_t>>> got;
    try {
      for (const auto& d : p.diagnose(model, ctx)) got.push_back({d.risk_id, d.evidence});
    } catch (const std::exception&) {
      continue;
    }
    const auto want = oracle_diagnose(model.risk, ctx);
    agree += got == want;
    nonempty += !want.empty();
  }
  report(agree == trials, "oracle-equivalence",
         std::to_string(agree) + "/" + std::to_string(trials) + " contexts match the keyword oracle (" +
             std::to_string(nonempty) + " with diagnoses)");
}

// --- 4 ---------------------------------------------------------------------

std::string adversarial_output(std::mt19937& rng, const RiskModel& risk) {
  static const std::vector<std::string> junk_ids = {"pricing", "", "TESTING", "testing ", "emotions", "../etc",
                                                    "distribution_channels", "risk-12"};
  json ds = json::array();
  const int n = static_cast<int>(rng() % 6);
  for (int i = 0; i < n; ++i) {
    std::string id = rng() % 2 ? risk.risks[rng() % risk.risks.size()].id : junk_ids[rng() % junk_ids.size()];
    json ev = json::array();
    for (int k = 0, c = 1 + static_cast<int>(rng() % 3); k < c; ++k) ev.push_back(static_cast<int>(rng() % 12) - 2);
    json d{{"risk_id", id}, {"rationale", "because"}, {"evidence", ev}};
    if (rng() % 10 == 0) d["confidence"] = 0.5;
    if (rng() % 12 == 0) d.erase("rationale");
    ds.push_back(d);
  }
  std::string text = json{{"diagnoses", ds}}.dump();
  switch (rng() % 7) {
    case 0: return "```json\n" + text + "\n```";
    case 1: return "Here is my analysis:\n" + text + "\nLet me know if you need more.";
    case 2: return text.substr(0, text.size() / 2);
    case 3: return "I cannot help with that.";
    case 4: return "[" + text + "]";
    default: return text;
  }
}

void containment() {
  const auto base = seed_default_models();
  std::mt19937 rng(99);
  int escapes = 0, crashes = 0, schema_errors = 0, returned = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    auto model = base;
    for (auto& r : model.risk.risks) r.enabled = rng() % 3 != 0;
    const auto first = adversarial_output(rng, model.risk);
    const auto second = adversarial_output(rng, model.risk);
    FnBackend b([&](const CompletionRequest& r) { return r.attempt == 0 ? first : second; });
    Gateway gw(b, stepping_clock(reproducible_epoch()));
    Pipeline p(gw, stepping_clock(reproducible_epoch()));
    const std::vector<ContextEntry> ctx = {{"plan", "Goals", "launch soon", 2}, {"obstacles", "Obstacles", "busy", 4}};
    try {
      for (const auto& d : p.diagnose(model, ctx)) {
        ++returned;
        if (!model.risk.is_enabled(d.risk_id)) ++escapes;
      }
    } catch (const SchemaError&) {
      ++schema_errors;
    } catch (const Error&) {
      ++crashes;  // no other error is expected from a well-formed call
    } catch (...) {
      ++crashes;
    }
  }

  const auto corpus = testkit::read_json(testkit::fixtures() / "malformed_wrappers.json")["cases"];
  int recovered = 0;
  for (const auto& c : corpus) {
    try {
      const auto task = prompt_task_from_string(c["task"].get<std::string>());
      recovered += parse_structured(c["raw"].get<std::string>(), schema_for(task)).value == c["expected"];
    } catch (const std::exception&) {
    }
  }
  report(escapes == 0 && crashes == 0 && recovered == static_cast<int>(corpus.size()) && corpus.size() == 10,
         "containment",
         std::to_string(trials) + " adversarial outputs, " + std::to_string(escapes) + " escapes, " +
             std::to_string(crashes) + " crashes, " + std::to_string(schema_errors) + " rejected; " +
             std::to_string(recovered) + "/" + std::to_string(corpus.size()) + " wrappers recovered");
}

// --- 5 ---------------------------------------------------------------------

void agenda_partition() {
  const auto m = seed_default_models();
  const auto eng = testkit::test_engine();
  const auto ids = testkit::seeded_risk_ids();
  std::mt19937 rng(5);
  int ok = 0, rejected_ok = 0, bad_inputs = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const auto diagnosed = testkit::random_subset(rng, ids);
    const auto s = testkit::to_prioritizing(eng, m, diagnosed);
    auto selected = testkit::random_subset(rng, diagnosed);
    const int mutate = static_cast<int>(rng() % 5);
    bool invalid = false;
    if (mutate == 0 && !selected.empty()) {
      selected.push_back(selected.front());
      invalid = true;
    } else if (mutate == 1) {
      for (const auto& id : ids) {
        if (std::find(diagnosed.begin(), diagnosed.end(), id) == diagnosed.end()) {
          selected.push_back(id);
          invalid = true;
          break;
        }
      }
    }
    if (invalid) {
      ++bad_inputs;
      try {
        eng.set_agenda(s, selected, "");
      } catch (const Error& e) {
        rejected_ok += e.code() == Errc::duplicate_selection || e.code() == Errc::unknown_risk;
      }
      continue;
    }
    const auto done = eng.set_agenda(s, selected, "n");
    std::set<std::string> sel(done.agenda->selected.begin(), done.agenda->selected.end());
    std::set<std::string> all(diagnosed.begin(), diagnosed.end());
    std::set<std::string> uni = sel;
    uni.insert(done.agenda->omitted.begin(), done.agenda->omitted.end());
    bool disjoint = true;
    for (const auto& o : done.agenda->omitted) disjoint = disjoint && !sel.count(o);
    ok += done.agenda->selected == selected && uni == all && disjoint && done.phase == Phase::complete;
  }
  report(ok + rejected_ok == trials, "agenda-partition",
         std::to_string(ok) + " partitions exact, " + std::to_string(rejected_ok) + "/" + std::to_string(bad_inputs) +
             " invalid selections rejected, of " + std::to_string(trials));
}

// --- 6 ---------------------------------------------------------------------

void authoring_round_trip() {
  std::mt19937 rng(6);
  int ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    testkit::TempDir dir;
    ScriptedBackend offline({});
    RiskModel expected_risk;
    std::vector<std::string> expected_targets;
    std::int64_t start = 0;
    bool conflicts_ok = true;
    {
      FileStore store(dir.path());
      CoachService svc(store, offline);
      auto cur = svc.current_model().risk;
      start = cur.version;
      const int n = 1 + static_cast<int>(rng() % 6);
      for (int i = 0; i < n; ++i) {
        const auto target = cur.risks[rng() % cur.risks.size()];
        switch (rng() % 3) {
          case 0: {
            RiskDefinition def;
            def.name = "Added " + std::to_string(i) + " " + std::to_string(rng() % 1000);
            def.description = "If nobody owns this, there is a risk it slips.";
            cur = svc.add_risk("mentor", def, cur.version);
            expected_targets.push_back(cur.risks.back().id);
            break;
          }
          case 1: {
            RiskPatch p;
            p.description = "If " + std::to_string(rng()) + " holds, there is a risk of rework.";
            cur = svc.revise_risk("mentor", target.id, p, cur.version);
            expected_targets.push_back(target.id);
            break;
          }
          default:
            cur = svc.set_risk_enabled("mentor", target.id, !target.enabled, cur.version);
            expected_targets.push_back(target.id);
        }
        try {
          svc.set_risk_enabled("mentor", target.id, true, cur.version - 1);
          conflicts_ok = false;
        } catch (const VersionConflict&) {
        }
      }
      expected_risk = cur;
    }
    FileStore store(dir.path());
    CoachService svc(store, offline);
    const auto loaded = svc.current_model().risk;
    const auto audit = svc.model_audit();
    std::vector<std::string> targets;
    bool versions = true;
    for (std::size_t i = 0; i < audit.entries().size(); ++i) {
      targets.push_back(audit.entries()[i].target_id);
      versions = versions && audit.entries()[i].model_version == start + static_cast<std::int64_t>(i) + 1;
    }
    const auto seed = seed_default_models().risk;
    ok += loaded == expected_risk && targets == expected_targets && versions && conflicts_ok &&
          loaded.version == start + static_cast<std::int64_t>(expected_targets.size()) &&
          apply_diff(seed, diff_models(seed, loaded)) == loaded.risks &&
          validate_risk_model(to_json(loaded)) == loaded;
  }
  report(ok == trials, "authoring-round-trip",
         std::to_string(ok) + "/" + std::to_string(trials) + " edit sequences persist, audit and version exactly");
}

// --- 7 ---------------------------------------------------------------------

void store_durability() {
  std::mt19937 rng(7);
  int ok = 0, killed = 0;
  const int trials = 100;
  const FaultPoint points[] = {FaultPoint::temp_written, FaultPoint::before_swap, FaultPoint::after_swap};
  for (int t = 0; t < trials; ++t) {
    testkit::TempDir dir;
    const StoreKey key{"sessions", "s-" + std::to_string(t)};
    const auto body = [](int n) { return json{{"schema_version", 1}, {"n", n}, {"pad", std::string(n * 37, 'x')}}.dump(); };
    const int before = 1 + static_cast<int>(rng() % 3);
    {
      FileStore s(dir.path());
      for (int i = 1; i <= before; ++i) s.put(key, body(i));
    }
    const FaultPoint point = points[rng() % 3];
    std::fflush(nullptr);
    const pid_t child = fork();
    if (child == 0) {
      FileStore s(dir.path());
      s.fault_hook = [point](FaultPoint p, const StoreKey&) {
        if (p == point) ::kill(::getpid(), SIGKILL);
      };
      s.put(key, body(before + 1), before);
      _exit(0);
    }
    int status = 0;
    waitpid(child, &status, 0);
    killed += WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL;

    try {
      FileStore s(dir.path());
      const auto rec = s.get(key);
      const bool old_value = rec.version == before && rec.body == body(before);
      const bool new_value = rec.version == before + 1 && rec.body == body(before + 1);
      const bool after_swap_new = point != FaultPoint::after_swap || new_value;
      const bool before_swap_old = point == FaultPoint::after_swap || old_value;
      bool clean = true;
      for (const auto& e : fs::directory_iterator(dir.path() / "sessions"))
        clean = clean && e.path().filename().string().rfind(".tmp-", 0) != 0;
      const auto next = s.put(key, body(9), rec.version);
      ok += (old_value || new_value) && after_swap_new && before_swap_old && clean && next == rec.version + 1;
    } catch (const std::exception&) {
    }
  }
  report(ok == trials && killed == trials, "store-durability",
         std::to_string(killed) + " writers killed mid-write, " + std::to_string(ok) + "/" + std::to_string(trials) +
             " records old-or-new, readable and writable after restart");
}

// --- 8 ---------------------------------------------------------------------

void role_wall() {
  // method, path pattern, mentor may call, novice may call
  struct Expect {
    const char* method;
    const char* pattern;
    bool mentor;
    bool novice;
  };
  const std::vector<Expect> matrix = {
      {"POST", "/v1/sessions", false, true},
      {"GET", "/v1/sessions", true, true},
      {"GET", "/v1/sessions/{id}", true, true},
      {"POST", "/v1/sessions/{id}/messages", false, true},
      {"POST", "/v1/sessions/{id}/agenda", false, true},
      {"GET", "/v1/sessions/{id}/dashboard", true, true},
      {"GET", "/v1/sessions/{id}/goals", true, false},
      {"PUT", "/v1/sessions/{id}/goals", true, false},
      {"POST", "/v1/sessions/{id}/rediagnose", true, false},
      {"GET", "/v1/risk-model", true, true},
      {"POST", "/v1/risk-model/risks", true, false},
      {"PATCH", "/v1/risk-model/risks/{id}", true, false},
      {"POST", "/v1/risk-model/risks/{id}/enabled", true, false},
      {"GET", "/v1/project-model", true, true},
      {"PATCH", "/v1/project-model/areas/{id}", true, false},
      {"GET", "/v1/audit", true, false},
  };

  std::set<std::pair<std::string, std::string>> listed, expected;
  for (const auto& r : ApiRouter::routes()) listed.insert({r.method, r.pattern});
  for (const auto& e : matrix) expected.insert({e.method, e.pattern});

  RuleMockBackend mock(testkit::read_json(testkit::fixtures() / "mock_tables.json"));
  MemoryStore store;
  CoachService svc(store, mock);
  ApiRouter router(svc, {{"m", {"mentor-1", Role::mentor}}, {"n", {"novice-1", Role::novice}}});
  int right = 0, total = 0;
  for (const auto& e : matrix) {
    std::string path = e.pattern;
    if (auto at = path.find("{id}"); at != std::string::npos) path.replace(at, 4, "missing");
    for (const auto& [token, allowed] : {std::pair{"m", e.mentor}, std::pair{"n", e.novice}}) {
      ApiRequest r{e.method, path, {}, {{"authorization", std::string("Bearer ") + token}}, "{}"};
      const auto res = router.handle(r);
      const bool walled = res.status == 403;
      right += walled != allowed;
      ++total;
    }
    ApiRequest anon{e.method, path, {}, {}, ""};
    right += router.handle(anon).status == 401;
    ++total;
  }
  report(right == total && listed == expected, "api-role-wall",
         std::to_string(right) + "/" + std::to_string(total) + " route x role outcomes as expected over " +
             std::to_string(matrix.size()) + " routes" + (listed == expected ? "" : ", route table differs"));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, void (*)()>> criteria = {
      {"seed-fidelity", seed_fidelity},         {"e2e-determinism", e2e_determinism},
      {"oracle-equivalence", oracle_equivalence}, {"containment", containment},
      {"agenda-partition", agenda_partition},   {"authoring-round-trip", authoring_round_trip},
      {"store-durability", store_durability},   {"api-role-wall", role_wall},
  };
  for (const auto& [name, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
