#include "coach/api.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "coach/error.hpp"

namespace coach {

namespace {

struct Denied {
  int status;
  std::string reason;
  std::string message;
};

ApiResponse error_response(int status, std::string_view reason, const std::string& message, json extra = json::object()) {
  json err{{"reason", reason}, {"message", message}};
  for (auto& [k, v] : extra.items()) err[k] = v;
  return {status, json{{"error", err}}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) out.push_back(std::exchange(cur, {}));
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Ctx {
  const Principal& who;
  const ApiRequest& req;
  std::map<std::string, std::string> params;

  json body() const {
    if (trim(req.body).empty()) return json::object();
    json doc = json::parse(req.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw ValidationError(std::vector<FieldError>{{"body", "expected a JSON object"}});
    }
    return doc;
  }
  const std::string& id() const { return params.at("id"); }
};

using Handler = std::function<ApiResponse(CoachService&, Ctx&)>;

struct Route {
  std::string method;
  std::string pattern;
  bool mentor;
  bool novice;
  Handler fn;
};

template <typename T>
T required(const json& body, const char* name, const char* kind) {
  auto it = body.find(name);
  try {
    if (it == body.end()) throw std::invalid_argument("missing");
    return it->get<T>();
  } catch (const std::exception&) {
    throw ValidationError(std::vector<FieldError>{{name, std::string("expected ") + kind}});
  }
}

std::optional<std::int64_t> expected_version(const Ctx& c, json& body) {
  std::optional<std::int64_t> v;
  if (auto it = body.find("expected_version"); it != body.end()) {
    if (!it->is_number_integer()) throw ValidationError(std::vector<FieldError>{{"expected_version", "expected integer"}});
    v = it->get<std::int64_t>();
    body.erase("expected_version");
  }
  if (auto h = c.req.headers.find("if-match"); h != c.req.headers.end()) {
    try {
      v = std::stoll(h->second);
    } catch (const std::exception&) {
      throw ValidationError(std::vector<FieldError>{{"If-Match", "expected a model version number"}});
    }
  }
  return v;
}

// The caller's own session, or any session for a mentor.
SessionBundle visible_session(CoachService& svc, const Ctx& c) {
  auto b = svc.load(c.id());
  if (c.who.role == Role::novice && b.session.novice_id != c.who.user_id) {
    throw Denied{403, "forbidden", "session belongs to another novice"};
  }
  return b;
}

json session_view(const SessionBundle& b) {
  return json{{"session", to_json(b.session)},
              {"processing", "idle"},
              {"agenda_document", b.agenda_document ? to_json(*b.agenda_document) : json()}};
}

json turn_view(const Turn& t) {
  json out = to_json(t);
  out["processing"] = "idle";
  return out;
}

json summary_view(const RecordSummary& s) {
  return json{{"session_id", s.key.id},
              {"novice_id", s.novice_id},
              {"version", s.version},
              {"updated_at", format_timestamp(s.updated_at)}};
}

void require_risk(CoachService& svc, const std::string& id) {
  if (!svc.current_model().risk.find(id)) throw Error(Errc::not_found, "no risk \"" + id + "\"");
}

const std::vector<Route>& route_table() {
  static const std::vector<Route> table = {
      {"POST", "/v1/sessions", false, true,
       [](CoachService& svc, Ctx& c) {
         c.body();
         return ApiResponse{201, turn_view(svc.create_session(c.who.user_id))};
       }},
      {"GET", "/v1/sessions", true, true,
       [](CoachService& svc, Ctx& c) {
         ListFilter f;
         if (c.who.role == Role::novice) {
           f.novice_id = c.who.user_id;
         } else if (auto q = c.req.query.find("novice_id"); q != c.req.query.end()) {
           f.novice_id = q->second;
         }
         json items = json::array();
         for (const auto& s : svc.list_sessions(f)) items.push_back(summary_view(s));
         return ApiResponse{200, json{{"sessions", items}}};
       }},
      {"GET", "/v1/sessions/{id}", true, true,
       [](CoachService& svc, Ctx& c) { return ApiResponse{200, session_view(visible_session(svc, c))}; }},
      {"POST", "/v1/sessions/{id}/messages", false, true,
       [](CoachService& svc, Ctx& c) {
         visible_session(svc, c);
         const auto body = c.body();
         const auto text = required<std::string>(body, "text", "string");
         std::optional<std::string> key;
         if (auto h = c.req.headers.find("idempotency-key"); h != c.req.headers.end()) key = h->second;
         return ApiResponse{200, turn_view(svc.post_message(c.id(), text, key))};
       }},
      {"POST", "/v1/sessions/{id}/agenda", false, true,
       [](CoachService& svc, Ctx& c) {
         visible_session(svc, c);
         const auto body = c.body();
         const auto selected = required<std::vector<std::string>>(body, "selected", "list of risk ids");
         const auto notes = body.contains("notes") ? required<std::string>(body, "notes", "string") : std::string();
         return ApiResponse{200, session_view(svc.set_agenda(c.id(), selected, notes))};
       }},
      {"GET", "/v1/sessions/{id}/dashboard", true, true,
       [](CoachService& svc, Ctx& c) {
         auto q = c.req.query.find("role");
         const std::string role = q != c.req.query.end() ? q->second : std::string(to_string(c.who.role));
         if (role != "novice" && role != "mentor") {
           throw ValidationError(std::vector<FieldError>{{"role", "expected novice or mentor"}});
         }
         if (role == "mentor" && c.who.role != Role::mentor) {
           throw Denied{403, "forbidden", "the mentor dashboard needs the mentor role"};
         }
         visible_session(svc, c);
         if (role == "mentor") return ApiResponse{200, to_json(svc.mentor_dashboard(c.id()))};
         return ApiResponse{200, to_json(svc.novice_dashboard(c.id()))};
       }},
      {"GET", "/v1/sessions/{id}/goals", true, false,
       [](CoachService& svc, Ctx& c) {
         visible_session(svc, c);
         auto g = svc.goals(c.id());
         if (!g) throw Error(Errc::not_found, "no goals set for session " + c.id());
         return ApiResponse{200, to_json(*g)};
       }},
      {"PUT", "/v1/sessions/{id}/goals", true, false,
       [](CoachService& svc, Ctx& c) {
         visible_session(svc, c);
         const auto body = c.body();
         const auto focus = body.contains("focus_risk_ids")
                                ? required<std::vector<std::string>>(body, "focus_risk_ids", "list of risk ids")
                                : std::vector<std::string>{};
         const auto outcomes =
             body.contains("desired_outcomes") ? required<std::string>(body, "desired_outcomes", "string") : std::string();
         return ApiResponse{200, to_json(svc.set_goals(c.id(), focus, outcomes))};
       }},
      {"POST", "/v1/sessions/{id}/rediagnose", true, false,
       [](CoachService& svc, Ctx& c) {
         visible_session(svc, c);
         return ApiResponse{200, session_view(svc.rediagnose(c.id()))};
       }},
      {"GET", "/v1/risk-model", true, true,
       [](CoachService& svc, Ctx&) { return ApiResponse{200, to_json(svc.current_model().risk)}; }},
      {"POST", "/v1/risk-model/risks", true, false,
       [](CoachService& svc, Ctx& c) {
         auto body = c.body();
         const auto expected = expected_version(c, body);
         RiskDefinition def;
         std::vector<FieldError> errors;
         for (const auto& [k, _] : body.items()) {
           if (k != "id" && k != "name" && k != "description" && k != "examples" && k != "enabled") {
             errors.push_back({k, "unknown field"});
           }
         }
         if (!errors.empty()) throw ValidationError(errors);
         if (body.contains("id")) def.id = required<std::string>(body, "id", "string");
         def.name = required<std::string>(body, "name", "string");
         def.description = required<std::string>(body, "description", "string");
         if (body.contains("examples")) def.examples = required<std::vector<std::string>>(body, "examples", "list of strings");
         if (body.contains("enabled")) def.enabled = required<bool>(body, "enabled", "boolean");
         return ApiResponse{201, to_json(svc.add_risk(c.who.user_id, def, expected))};
       }},
      {"PATCH", "/v1/risk-model/risks/{id}", true, false,
       [](CoachService& svc, Ctx& c) {
         auto body = c.body();
         const auto expected = expected_version(c, body);
         const auto patch = risk_patch_from_json(body);
         require_risk(svc, c.id());
         return ApiResponse{200, to_json(svc.revise_risk(c.who.user_id, c.id(), patch, expected))};
       }},
      {"POST", "/v1/risk-model/risks/{id}/enabled", true, false,
       [](CoachService& svc, Ctx& c) {
         auto body = c.body();
         const auto expected = expected_version(c, body);
         const bool value = required<bool>(body, "value", "boolean");
         require_risk(svc, c.id());
         return ApiResponse{200, to_json(svc.set_risk_enabled(c.who.user_id, c.id(), value, expected))};
       }},
      {"GET", "/v1/project-model", true, true,
       [](CoachService& svc, Ctx&) { return ApiResponse{200, to_json(svc.current_model().project)}; }},
      {"PATCH", "/v1/project-model/areas/{id}", true, false,
       [](CoachService& svc, Ctx& c) {
         auto body = c.body();
         const auto expected = expected_version(c, body);
         const auto patch = area_patch_from_json(body);
         if (!svc.current_model().project.find(c.id())) throw Error(Errc::not_found, "no area \"" + c.id() + "\"");
         return ApiResponse{200, to_json(svc.revise_area(c.who.user_id, c.id(), patch, expected))};
       }},
      {"GET", "/v1/audit", true, false,
       [](CoachService& svc, Ctx& c) {
         auto q = c.req.query.find("collection");
         const std::string collection = q != c.req.query.end() ? q->second : std::string(kAudits);
         json entries = json::array();
         if (collection == kAudits) {
           const auto log = svc.model_audit();
           for (const auto& e : log.entries()) entries.push_back(to_json(e));
         } else if (collection == kGatewayAudits) {
           auto s = c.req.query.find("session");
           if (s == c.req.query.end()) {
             throw ValidationError(std::vector<FieldError>{{"session", "gateway audits are listed per session"}});
           }
           std::istringstream in(svc.gateway_audit(s->second));
           std::string line;
           while (std::getline(in, line))
             if (!line.empty()) entries.push_back(json::parse(line));
         } else {
           throw ValidationError(std::vector<FieldError>{{"collection", "expected audits or gateway-audits"}});
         }
         return ApiResponse{200, json{{"collection", collection}, {"entries", entries}}};
       }},
  };
  return table;
}

}  // namespace

std::string_view to_string(Role r) { return r == Role::mentor ? "mentor" : "novice"; }

int http_status(Errc code) {
  switch (code) {
    case Errc::not_found: return 404;
    case Errc::wrong_phase:
    case Errc::version_conflict: return 409;
    case Errc::schema_error:
    case Errc::timeout:
    case Errc::transport_error:
    case Errc::backend_refused:
    case Errc::script_mismatch:
    case Errc::uncovered_task:
    case Errc::fixture_parse_error: return 502;
    case Errc::io_error:
    case Errc::migration_required: return 500;
    default: return 400;
  }
}

ApiRouter::ApiRouter(CoachService& service, std::map<std::string, Principal> tokens)
    : service_(service), tokens_(std::move(tokens)) {}

std::vector<ApiRouter::RouteInfo> ApiRouter::routes() {
  std::vector<RouteInfo> out;
  for (const auto& r : route_table()) out.push_back({r.method, r.pattern, r.mentor, r.novice});
  return out;
}

ApiResponse ApiRouter::handle(const ApiRequest& request) {
  auto auth = request.headers.find("authorization");
  const std::string prefix = "Bearer ";
  if (auth == request.headers.end() || auth->second.rfind(prefix, 0) != 0) {
    return error_response(401, "unauthorized", "missing bearer token");
  }
  auto tok = tokens_.find(trim(auth->second.substr(prefix.size())));
  if (tok == tokens_.end()) return error_response(401, "unauthorized", "unknown bearer token");
  const Principal& who = tok->second;

  const auto parts = split_path(request.path);
  const Route* match = nullptr;
  bool path_known = false;
  std::map<std::string, std::string> params;
  for (const auto& r : route_table()) {
    const auto pat = split_path(r.pattern);
    if (pat.size() != parts.size()) continue;
    std::map<std::string, std::string> p;
    bool ok = true;
    for (std::size_t i = 0; i < pat.size() && ok; ++i) {
      if (pat[i].front() == '{') {
        p[pat[i].substr(1, pat[i].size() - 2)] = parts[i];
      } else {
        ok = pat[i] == parts[i];
      }
    }
    if (!ok) continue;
    path_known = true;
    if (r.method == request.method) {
      match = &r;
      params = std::move(p);
      break;
    }
  }
  if (!match) {
    return path_known ? error_response(405, "method_not_allowed", request.method + " is not supported on " + request.path)
                      : error_response(404, "not_found", "no route " + request.path);
  }
  if (!(who.role == Role::mentor ? match->mentor : match->novice)) {
    return error_response(403, "forbidden", std::string(to_string(who.role)) + " may not " + match->method + " " +
                                                match->pattern);
  }

  Ctx ctx{who, request, std::move(params)};
  try {
    return match->fn(service_, ctx);
  } catch (const Denied& d) {
    return error_response(d.status, d.reason, d.message);
  } catch (const ValidationError& e) {
    json fields = json::array();
    for (const auto& f : e.errors()) fields.push_back({{"path", f.path}, {"message", f.message}});
    return error_response(400, e.reason(), e.what(), json{{"fields", fields}});
  } catch (const VersionConflict& e) {
    return error_response(409, e.reason(), e.what(), json{{"current_version", e.current()}});
  } catch (const BackendError& e) {
    return error_response(502, e.reason(), e.what(), json{{"task", e.task}, {"audit_hash", e.audit_hash}});
  } catch (const SchemaError& e) {
    json problems = json::array();
    for (const auto& f : e.problems()) problems.push_back({{"path", f.path}, {"message", f.message}});
    return error_response(502, e.reason(), e.what(), json{{"problems", problems}});
  } catch (const Error& e) {
    return error_response(http_status(e.code()), e.reason(), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

// --- configuration --------------------------------------------------------

ApiConfig api_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError(std::vector<FieldError>{{"", "expected object"}});
  ApiConfig c;
  std::vector<FieldError> errors;
  if (doc.contains("listen")) {
    const auto listen = doc["listen"].get<std::string>();
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) {
      errors.push_back({"listen", "expected HOST:PORT"});
    } else {
      c.host = listen.substr(0, colon);
      try {
        c.port = std::stoi(listen.substr(colon + 1));
      } catch (const std::exception&) {
        errors.push_back({"listen", "expected HOST:PORT"});
      }
    }
  }
  if (doc.contains("store")) c.store_root = doc["store"].get<std::string>();
  if (doc.contains("backend")) c.backend = doc["backend"].get<std::string>();
  if (doc.contains("live")) c.live = live_config_from_json(doc["live"]);
  if (!doc.contains("tokens") || !doc["tokens"].is_object() || doc["tokens"].empty()) {
    errors.push_back({"tokens", "expected at least one token"});
  } else {
    for (const auto& [token, p] : doc["tokens"].items()) {
      const auto role = p.value("role", "");
      const auto user = p.value("user_id", "");
      if ((role != "mentor" && role != "novice") || user.empty()) {
        errors.push_back({"tokens." + token.substr(0, 4) + "...", "needs user_id and role mentor|novice"});
        continue;
      }
      c.tokens[token] = {user, role == "mentor" ? Role::mentor : Role::novice};
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return c;
}

ApiConfig load_api_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw ValidationError(std::vector<FieldError>{{"config", path.string() + " is not valid JSON"}});
  return api_config_from_json(doc);
}

// --- HTTP adapter ---------------------------------------------------------

void serve(ApiRouter& router, const std::string& host, int port) {
  httplib::Server server;
  auto dispatch = [&router](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    for (const auto& [k, v] : req.headers) r.headers[to_lower(k)] = v;
    r.body = req.body;
    const auto out = router.handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json; charset=utf-8");
  };
  const std::string any = R"(/v1/.*)";
  server.Get(any, dispatch);
  server.Post(any, dispatch);
  server.Put(any, dispatch);
  server.Patch(any, dispatch);
  server.Delete(any, dispatch);
  if (!server.listen(host, port)) throw Error(Errc::io_error, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace coach
