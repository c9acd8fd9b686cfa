// Python bindings. JSON crosses the boundary as text; the package wrapper
// decodes it.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coach/api.hpp"
#include "coach/error.hpp"
#include "coach/structured.hpp"
#include "coach/transcript.hpp"

namespace py = pybind11;
using namespace coach;

namespace {

// Owns everything an in-process API needs.
class LocalApi {
 public:
  LocalApi(const std::string& backend, const std::string& store_root, std::map<std::string, std::pair<std::string, std::string>> tokens,
           bool reproducible)
      : backend_(make_backend(backend)) {
    ServiceOptions options;
    if (reproducible) {
      options.clock = stepping_clock(reproducible_epoch());
      options.ids = sequential_ids("session-");
    }
    if (store_root.empty()) {
      store_ = std::make_unique<MemoryStore>(options.clock);
    } else {
      store_ = std::make_unique<FileStore>(store_root, options.clock);
    }
    service_ = std::make_unique<CoachService>(*store_, *backend_, options);
    std::map<std::string, Principal> principals;
    for (const auto& [token, who] : tokens) {
      if (who.second != "mentor" && who.second != "novice") {
        throw ValidationError(std::vector<FieldError>{{"tokens", "role must be mentor or novice"}});
      }
      principals[token] = {who.first, who.second == "mentor" ? Role::mentor : Role::novice};
    }
    router_ = std::make_unique<ApiRouter>(*service_, std::move(principals));
  }

  std::pair<int, std::string> handle(const std::string& method, const std::string& path, const std::string& token,
                                     const std::string& body, const std::map<std::string, std::string>& query,
                                     const std::map<std::string, std::string>& headers) {
    ApiRequest r{method, path, query, {}, body};
    for (const auto& [k, v] : headers) r.headers[to_lower(k)] = v;
    if (!token.empty()) r.headers["authorization"] = "Bearer " + token;
    ApiResponse out;
    {
      py::gil_scoped_release release;
      out = router_->handle(r);
    }
    return {out.status, out.body.dump()};
  }

 private:
  std::unique_ptr<Backend> backend_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<CoachService> service_;
  std::unique_ptr<ApiRouter> router_;
};

std::map<std::string, std::string> run_fixture(const std::string& transcript, const std::string& backend) {
  const auto fixture = load_transcript(transcript);
  auto b = make_backend(backend);
  ServiceOptions options;
  options.clock = stepping_clock(reproducible_epoch());
  options.ids = sequential_ids("session-");
  MemoryStore store(options.clock);
  CoachService service(store, *b, options);
  const auto result = run_session(service, fixture);
  std::map<std::string, std::string> out{
      {"novice_dashboard.json", to_json(result.novice).dump(2) + "\n"},
      {"novice_dashboard.txt", render_export(result.novice)},
      {"mentor_dashboard.json", to_json(result.mentor).dump(2) + "\n"},
      {"mentor_dashboard.txt", render_export(result.mentor)},
      {"session.json", to_json(result.bundle.session).dump(2) + "\n"},
  };
  if (result.bundle.agenda_document) {
    out["agenda.json"] = to_json(*result.bundle.agenda_document).dump(2) + "\n";
    out["agenda.txt"] = render_agenda_text(*result.bundle.agenda_document);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pre-meeting coaching engine";

  static py::exception<Error> coach_error(m, "CoachError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = coach_error;
      py::object inst = exc(e.what());
      inst.attr("reason") = std::string(e.reason());
      if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
        py::list fields;
        for (const auto& f : v->errors()) fields.append(py::make_tuple(f.path, f.message));
        inst.attr("fields") = fields;
      }
      PyErr_SetObject(exc.ptr(), inst.ptr());
    }
  });

  m.def("seed_models", [] {
    const auto s = seed_default_models();
    return std::make_pair(to_json(s.project).dump(), to_json(s.risk).dump());
  });
  m.def(
      "validate_model",
      [](const std::string& kind, const std::string& text) {
        json doc = json::parse(text, nullptr, false);
        if (doc.is_discarded()) throw ValidationError(std::vector<FieldError>{{"", "not valid JSON"}});
        return model_kind_from_string(kind) == ModelKind::project ? to_json(validate_project_model(doc)).dump()
                                                                  : to_json(validate_risk_model(doc)).dump();
      },
      py::arg("kind"), py::arg("text"));
  m.def(
      "parse_structured",
      [](const std::string& task, const std::string& raw) {
        const auto out = parse_structured(raw, schema_for(prompt_task_from_string(task)));
        return std::make_pair(out.value.dump(), std::string(to_string(out.stage)));
      },
      py::arg("task"), py::arg("raw"));
  m.def("run_fixture", &run_fixture, py::arg("transcript"), py::arg("backend"));

  py::class_<LocalApi>(m, "LocalApi")
      .def(py::init<const std::string&, const std::string&, std::map<std::string, std::pair<std::string, std::string>>,
                    bool>(),
           py::arg("backend"), py::arg("store_root") = "", py::arg("tokens"), py::arg("reproducible") = true)
      .def("handle", &LocalApi::handle, py::arg("method"), py::arg("path"), py::arg("token") = "",
           py::arg("body") = "", py::arg("query") = std::map<std::string, std::string>{},
           py::arg("headers") = std::map<std::string, std::string>{});
}
