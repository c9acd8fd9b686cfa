// coachctl: operator tooling for the coaching service.
//
// Exit codes: 0 success, 1 domain or validation error, 2 infrastructure
// error. Errors are printed to stderr as "error: <reason>: <message>".

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "coach/api.hpp"
#include "coach/error.hpp"
#include "coach/model_registry.hpp"
#include "coach/service.hpp"
#include "coach/store.hpp"
#include "coach/transcript.hpp"

namespace fs = std::filesystem;
using namespace coach;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw Error(Errc::io_error, "cannot write " + path.string());
}

int seed_models(const fs::path& out, bool force) {
  const auto project = out / "project_model.json";
  const auto risk = out / "risk_model.json";
  if (!force) {
    for (const auto& p : {project, risk}) {
      if (fs::exists(p)) throw Error(Errc::validation, p.string() + " already exists; pass --force to overwrite");
    }
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + out.string() + ": " + ec.message());
  const auto seed = seed_default_models();
  write_text(project, to_json(seed.project).dump(2) + "\n");
  write_text(risk, to_json(seed.risk).dump(2) + "\n");
  std::cout << project.string() << "\n" << risk.string() << "\n";
  return 0;
}

int validate(const fs::path& file, const std::string& kind) {
  const auto which = model_kind_from_string(kind);
  json doc = json::parse(read_text(file), nullptr, false);
  if (doc.is_discarded()) throw ValidationError(std::vector<FieldError>{{"", file.string() + " is not valid JSON"}});
  if (which == ModelKind::project) {
    const auto m = validate_project_model(doc);
    std::cout << "ok: project model v" << m.version << " with " << m.areas.size() << " areas\n";
  } else {
    const auto m = validate_risk_model(doc);
    std::cout << "ok: risk model v" << m.version << " with " << m.risks.size() << " risks\n";
  }
  return 0;
}

std::unique_ptr<Store> open_store(const std::string& root, Clock clock) {
  if (root.empty()) return std::make_unique<MemoryStore>(std::move(clock));
  return std::make_unique<FileStore>(root, std::move(clock));
}

int run_session_cmd(const fs::path& transcript, const std::string& backend_spec, const fs::path& out,
                    const std::string& store_root, bool wall_clock) {
  const auto fixture = load_transcript(transcript);
  auto backend = make_backend(backend_spec);
  ServiceOptions options;
  if (!wall_clock) {
    options.clock = stepping_clock(reproducible_epoch());
    options.ids = sequential_ids("session-");
  }
  auto store = open_store(store_root, options.clock);
  CoachService service(*store, *backend, options);
  const auto result = run_session(service, fixture);
  write_run_outputs(result, out);
  std::cout << result.bundle.session.id << "\n";
  return 0;
}

int export_cmd(const std::string& session_id, const fs::path& out, const std::string& store_root) {
  if (!fs::exists(store_root)) throw Error(Errc::io_error, "store root " + store_root + " does not exist");
  FileStore store(store_root);
  ScriptedBackend offline({}, "offline");
  CoachService service(store, offline);
  const auto bundle = service.load(session_id);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + out.string() + ": " + ec.message());
  const auto novice = service.novice_dashboard(session_id);
  write_text(out / "novice_dashboard.json", to_json(novice).dump(2) + "\n");
  write_text(out / "novice_dashboard.txt", render_export(novice));
  if (bundle.session.phase == Phase::complete) {
    const auto mentor = service.mentor_dashboard(session_id);
    write_text(out / "mentor_dashboard.json", to_json(mentor).dump(2) + "\n");
    write_text(out / "mentor_dashboard.txt", render_export(mentor));
  }
  if (bundle.agenda_document) {
    write_text(out / "agenda.json", to_json(*bundle.agenda_document).dump(2) + "\n");
    write_text(out / "agenda.txt", render_agenda_text(*bundle.agenda_document));
  }
  return 0;
}

int serve_cmd(const fs::path& config_path) {
  const auto config = load_api_config(config_path);
  std::unique_ptr<Backend> backend =
      config.backend == "live" && config.live ? std::make_unique<LiveBackend>(*config.live) : make_backend(config.backend);
  FileStore store(config.store_root);
  CoachService service(store, *backend);
  service.current_model();  // seeds an empty store
  ApiRouter router(service, config.tokens);
  std::cerr << "listening on " << config.host << ":" << config.port << "\n";
  serve(router, config.host, config.port);
  return 0;
}

int report(const Error& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    for (const auto& f : v->errors()) {
      std::cerr << "error: " << e.reason() << ": " << (f.path.empty() ? "(document)" : f.path) << ": " << f.message
                << "\n";
    }
  } else {
    std::cerr << "error: " << e.reason() << ": " << e.what() << "\n";
  }
  return is_domain_error(e.code()) ? 1 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator tooling for the pre-meeting coaching service"};
  app.require_subcommand(1);

  std::string out, model_file, kind, transcript, backend, store_root, session_id, config;
  bool force = false, wall_clock = false;

  auto* seed = app.add_subcommand("seed-models", "Write the seeded project and risk models");
  seed->add_option("--out", out, "Output directory")->required();
  seed->add_flag("--force", force, "Overwrite existing files");

  auto* val = app.add_subcommand("validate", "Check a model document");
  val->add_option("--model", model_file, "Model JSON file")->required();
  val->add_option("--kind", kind, "project or risk")->required()->check(CLI::IsMember({"project", "risk"}));

  auto* run = app.add_subcommand("run-session", "Drive a session from a transcript fixture");
  run->add_option("--transcript", transcript, "Transcript fixture")->required();
  run->add_option("--backend", backend, "scripted:FIXTURE, mock:TABLE or live")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--store", store_root, "Persist into this store directory (default: in memory)");
  run->add_flag("--wall-clock", wall_clock, "Use real time and random ids instead of the reproducible defaults");

  auto* exp = app.add_subcommand("export", "Export dashboards of a stored session");
  exp->add_option("--session", session_id, "Session id")->required();
  exp->add_option("--out", out, "Output directory")->required();
  exp->add_option("--store", store_root, "Store directory")->required();

  auto* srv = app.add_subcommand("serve", "Run the HTTP API");
  srv->add_option("--config", config, "Service configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*seed) return seed_models(out, force);
    if (*val) return validate(model_file, kind);
    if (*run) return run_session_cmd(transcript, backend, out, store_root, wall_clock);
    if (*exp) return export_cmd(session_id, out, store_root);
    if (*srv) return serve_cmd(config);
  } catch (const Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
