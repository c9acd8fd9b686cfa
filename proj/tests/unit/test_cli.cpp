#include <doctest.h>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include <httplib.h>

#include "testkit.hpp"

namespace fs = std::filesystem;
using coach::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Run coachctl(const std::string& args, const std::string& env = "") {
  testkit::TempDir io;
  const auto out = io.path() / "out";
  const auto err = io.path() / "err";
  const std::string cmd = env + " " + quote(COACHCTL_PATH) + " " + args + " >" + quote(out.string()) + " 2>" +
                          quote(err.string());
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testkit::read_file(out), testkit::read_file(err)};
}

const fs::path& fx() {
  static const fs::path p = testkit::fixtures();
  return p;
}

}  // namespace

TEST_CASE("seed-models writes files that validate, and refuses to overwrite") {
  testkit::TempDir dir;
  const auto d = quote(dir.path().string());
  const auto r = coachctl("seed-models --out " + d);
  CHECK(r.code == 0);
  CHECK(coachctl("validate --kind project --model " + quote((dir.path() / "project_model.json").string())).code == 0);
  const auto v = coachctl("validate --kind risk --model " + quote((dir.path() / "risk_model.json").string()));
  CHECK(v.code == 0);
  CHECK(v.out == "ok: risk model v1 with 11 risks\n");
  const auto again = coachctl("seed-models --out " + d);
  CHECK(again.code == 1);
  CHECK(again.err.find("--force") != std::string::npos);
  CHECK(coachctl("seed-models --force --out " + d).code == 0);
}

TEST_CASE("validate reports every bad field") {
  testkit::TempDir dir;
  json risk{{"schema_version", 1}, {"version", 1}, {"risks", json::array()}};
  risk["risks"].push_back({{"id", "a"}, {"name", ""}, {"description", "no keyword here"}, {"examples", json::array()},
                           {"enabled", true}, {"order", 0}});
  risk["risks"].push_back({{"id", "a"}, {"name", "B"}, {"description", "a risk"}, {"examples", json::array()},
                           {"enabled", true}, {"order", 1}});
  const auto file = dir.path() / "bad.json";
  testkit::write_file(file, risk.dump());
  const auto r = coachctl("validate --kind risk --model " + quote(file.string()));
  CHECK(r.code == 1);
  CHECK(r.err.find("risks[0].name") != std::string::npos);
  CHECK(r.err.find("risks[0].description") != std::string::npos);
  CHECK(r.err.find("risks[1].id") != std::string::npos);

  testkit::write_file(file, "{ nope");
  CHECK(coachctl("validate --kind risk --model " + quote(file.string())).code == 1);
  CHECK(coachctl("validate --kind risk --model " + quote((dir.path() / "missing.json").string())).code == 2);
}

TEST_CASE("run-session reproduces the artist-fair goldens without touching the network") {
  testkit::TempDir dir;
  const auto log = dir.path() / "net.log";
  const auto out = dir.path() / "run";
  const std::string env = "LD_PRELOAD=" + quote(COACH_NONET_PATH) + " COACH_NONET_LOG=" + quote(log.string());
  const auto r = coachctl("run-session --transcript " + quote((fx() / "artist_fair" / "transcript.json").string()) +
                              " --backend " + quote("scripted:" + (fx() / "artist_fair" / "script.json").string()) +
                              " --out " + quote(out.string()),
                          env);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out == "session-1\n");
  for (const auto* name : {"novice_dashboard.json", "novice_dashboard.txt", "mentor_dashboard.json",
                           "mentor_dashboard.txt", "agenda.json", "agenda.txt", "session.json"}) {
    CHECK_MESSAGE(testkit::read_file(out / name) == testkit::read_file(fx() / "artist_fair" / "golden" / name), name);
  }
  CHECK_FALSE(fs::exists(log));
}

TEST_CASE("the shim does catch socket use") {
  testkit::TempDir dir;
  const auto log = dir.path() / "net.log";
  testkit::write_file(dir.path() / "c.json", R"({"listen":"127.0.0.1:1","store":")" + (dir.path() / "s").string() +
                                                 R"(","backend":"mock:)" + (fx() / "mock_tables.json").string() +
                                                 R"(","tokens":{"t":{"user_id":"m","role":"mentor"}}})");
  const std::string env = "LD_PRELOAD=" + quote(COACH_NONET_PATH) + " COACH_NONET_LOG=" + quote(log.string());
  const auto r = coachctl("serve --config " + quote((dir.path() / "c.json").string()), env);
  CHECK(r.code == 2);
  CHECK(fs::exists(log));
}

TEST_CASE("selecting an undiagnosed risk is a domain error") {
  testkit::TempDir dir;
  auto t = testkit::read_json(fx() / "mock_transcript.json");
  t["agenda"]["selected"] = json::array({"testing"});
  testkit::write_file(dir.path() / "t.json", t.dump());
  const auto r = coachctl("run-session --transcript " + quote((dir.path() / "t.json").string()) + " --backend " +
                          quote("mock:" + (fx() / "mock_tables.json").string()) + " --out " +
                          quote((dir.path() / "o").string()));
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown_risk") != std::string::npos);
}

TEST_CASE("infrastructure failures exit 2") {
  testkit::TempDir dir;
  const auto r = coachctl("run-session --transcript " + quote((fx() / "mock_transcript.json").string()) +
                          " --backend " + quote("scripted:" + (dir.path() / "nope.json").string()) + " --out " +
                          quote((dir.path() / "o").string()));
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: ", 0) == 0);
  CHECK(coachctl("export --session x --out o --store " + quote((dir.path() / "none").string())).code == 2);
}

TEST_CASE("export reads a stored session back") {
  testkit::TempDir dir;
  const auto store = quote((dir.path() / "store").string());
  const auto r = coachctl("run-session --transcript " + quote((fx() / "mock_transcript.json").string()) +
                          " --backend " + quote("mock:" + (fx() / "mock_tables.json").string()) + " --out " +
                          quote((dir.path() / "run").string()) + " --store " + store);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto id = r.out.substr(0, r.out.find('\n'));
  const auto e = coachctl("export --session " + quote(id) + " --store " + store + " --out " +
                          quote((dir.path() / "exp").string()));
  CHECK_MESSAGE(e.code == 0, e.err);
  for (const auto* name : {"novice_dashboard.json", "mentor_dashboard.txt", "agenda.json"}) {
    CHECK(testkit::read_file(dir.path() / "exp" / name) == testkit::read_file(dir.path() / "run" / name));
  }
  CHECK(coachctl("export --session nope --store " + store + " --out " + quote((dir.path() / "x").string())).code == 1);
}

TEST_CASE("serve answers over HTTP") {
  testkit::TempDir dir;
  const int port = 20000 + static_cast<int>(getpid() % 20000);
  const auto cfg = dir.path() / "c.json";
  testkit::write_file(cfg, json{{"listen", "127.0.0.1:" + std::to_string(port)},
                                {"store", (dir.path() / "s").string()},
                                {"backend", "mock:" + (fx() / "mock_tables.json").string()},
                                {"tokens", {{"tok-m", {{"user_id", "m"}, {"role", "mentor"}}},
                                            {"tok-n", {{"user_id", "n"}, {"role", "novice"}}}}}}
                               .dump());
  const pid_t child = fork();
  REQUIRE(child >= 0);
  if (child == 0) {
    const int devnull = ::open("/dev/null", O_WRONLY);
    dup2(devnull, 2);
    execl(COACHCTL_PATH, COACHCTL_PATH, "serve", "--config", cfg.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  httplib::Client cli("127.0.0.1", port);
  cli.set_connection_timeout(1);
  httplib::Result res;
  for (int i = 0; i < 100 && !res; ++i) {
    res = cli.Get("/v1/risk-model", {{"Authorization", "Bearer tok-n"}});
    if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["risks"].size() == 11);
  auto created = cli.Post("/v1/sessions", {{"Authorization", "Bearer tok-n"}}, "", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  auto denied = cli.Get("/v1/audit", {{"Authorization", "Bearer tok-n"}});
  REQUIRE(denied);
  CHECK(denied->status == 403);
  CHECK(cli.Get("/v1/risk-model")->status == 401);
  kill(child, SIGTERM);
  int st = 0;
  waitpid(child, &st, 0);
}
