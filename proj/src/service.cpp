#include "coach/service.hpp"

#include <algorithm>

#include "coach/error.hpp"

namespace coach {

namespace {

constexpr const char* kProjectKey = "project";
constexpr const char* kRiskKey = "risk";
constexpr const char* kModelAuditKey = "models";

std::string snapshot_key(const std::string& key, std::int64_t version) {
  return key + "@v" + std::to_string(version);
}

json parse_body(const StoredRecord& r) {
  json doc = json::parse(r.body, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::io_error, "stored record " + r.key.str() + " is not valid JSON");
  return doc;
}

ProjectModel model_from(const json& doc, ProjectModel*) { return validate_project_model(doc); }
RiskModel model_from(const json& doc, RiskModel*) { return validate_risk_model(doc); }

std::vector<ChatMessage> area_answers(const Session& s) {
  std::vector<ChatMessage> out;
  for (const auto& m : s.transcript)
    if (m.speaker == Speaker::novice && m.area_id) out.push_back(m);
  return out;
}

bool has_context_for(const Session& s, const std::string& area_id) {
  return std::any_of(s.context.begin(), s.context.end(), [&](const ContextEntry& e) { return e.area_id == area_id; });
}

}  // namespace

// --- bundle serialization -------------------------------------------------

json to_json(const SessionBundle& b) {
  json strategies = json::array();
  for (const auto& s : b.strategies) strategies.push_back(to_json(s));
  json idem = json::object();
  for (const auto& [k, v] : b.idempotency) idem[k] = v;
  return json{{"schema_version", 1},
              {"session", to_json(b.session)},
              {"agenda_document", b.agenda_document ? to_json(*b.agenda_document) : json()},
              {"strategies", strategies},
              {"idempotency", idem}};
}

SessionBundle session_bundle_from_json(const json& doc) {
  SessionBundle b;
  b.session = session_from_json(doc.at("session"));
  if (doc.contains("agenda_document") && !doc["agenda_document"].is_null()) {
    b.agenda_document = agenda_document_from_json(doc["agenda_document"]);
  }
  const auto strategies = doc.value("strategies", json::array());
  for (const auto& s : strategies) b.strategies.push_back(strategy_from_json(s));
  const auto idem = doc.value("idempotency", json::object());
  for (const auto& [k, v] : idem.items()) b.idempotency[k] = v;
  return b;
}

json to_json(const Turn& t) {
  json messages = json::array();
  for (const auto& m : t.messages) messages.push_back(to_json(m));
  return json{{"session", to_json(t.bundle.session)}, {"messages", messages}};
}

// --- service --------------------------------------------------------------

CoachService::CoachService(Store& store, Backend& backend, ServiceOptions options)
    : store_(store), backend_(backend), options_(std::move(options)), engine_(options_.clock, options_.ids) {}

std::vector<PipelineEvent> CoachService::last_events() const {
  std::lock_guard lock(events_mu_);
  return last_events_;
}

std::shared_ptr<std::mutex> CoachService::lock_for(const std::string& session_id) {
  std::lock_guard lock(locks_mu_);
  auto& m = session_locks_[session_id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

EditStamp CoachService::stamp(const std::string& author) {
  return {author, model_audit().next_seq(), options_.clock()};
}

void CoachService::ensure_seeded() {
  if (store_.find({std::string(kModels), kRiskKey})) return;
  const auto seed = seed_default_models();
  try {
    store_.put({std::string(kModels), kProjectKey}, to_json(seed.project).dump(), 0);
    store_.put({std::string(kModels), snapshot_key(kProjectKey, seed.project.version)}, to_json(seed.project).dump(), 0);
    store_.put({std::string(kModels), kRiskKey}, to_json(seed.risk).dump(), 0);
    store_.put({std::string(kModels), snapshot_key(kRiskKey, seed.risk.version)}, to_json(seed.risk).dump(), 0);
  } catch (const VersionConflict&) {
    // Another process seeded first.
  }
}

template <typename Model>
std::pair<Model, std::int64_t> CoachService::load_model(const std::string& key) {
  ensure_seeded();
  const auto rec = store_.get({std::string(kModels), key});
  return {model_from(parse_body(rec), static_cast<Model*>(nullptr)), rec.version};
}

CoachingModel CoachService::current_model() {
  return {load_model<ProjectModel>(kProjectKey).first, load_model<RiskModel>(kRiskKey).first};
}

CoachingModel CoachService::model_at(std::int64_t project_version, std::int64_t risk_version) {
  return {load_model<ProjectModel>(snapshot_key(kProjectKey, project_version)).first,
          load_model<RiskModel>(snapshot_key(kRiskKey, risk_version)).first};
}

void CoachService::commit_model(const std::string& key, const json& doc, std::int64_t expected,
                                std::int64_t model_version, const AuditEntry& entry) {
  store_.put({std::string(kModels), key}, doc.dump(), expected);
  store_.put({std::string(kModels), snapshot_key(key, model_version)}, doc.dump(), 0);
  store_.append({std::string(kAudits), kModelAuditKey}, to_json(entry).dump() + "\n");
}

namespace {

void check_expected(const std::string& key, std::optional<std::int64_t> expected, std::int64_t actual) {
  if (expected && *expected != actual) throw VersionConflict("models/" + key, actual);
}

}  // namespace

RiskModel CoachService::add_risk(const std::string& author, RiskDefinition def,
                                 std::optional<std::int64_t> expected_version) {
  std::lock_guard lock(model_mu_);
  auto [model, sv] = load_model<RiskModel>(kRiskKey);
  check_expected(kRiskKey, expected_version, model.version);
  auto edit = coach::add_risk(model, std::move(def), stamp(author));
  commit_model(kRiskKey, to_json(edit.model), sv, edit.model.version, edit.entry);
  return edit.model;
}

RiskModel CoachService::revise_risk(const std::string& author, const std::string& id, const RiskPatch& patch,
                                    std::optional<std::int64_t> expected_version) {
  std::lock_guard lock(model_mu_);
  auto [model, sv] = load_model<RiskModel>(kRiskKey);
  check_expected(kRiskKey, expected_version, model.version);
  auto edit = coach::revise_risk(model, id, patch, stamp(author));
  commit_model(kRiskKey, to_json(edit.model), sv, edit.model.version, edit.entry);
  return edit.model;
}

RiskModel CoachService::set_risk_enabled(const std::string& author, const std::string& id, bool enabled,
                                         std::optional<std::int64_t> expected_version) {
  std::lock_guard lock(model_mu_);
  auto [model, sv] = load_model<RiskModel>(kRiskKey);
  check_expected(kRiskKey, expected_version, model.version);
  auto edit = coach::set_enabled(model, id, enabled, stamp(author));
  commit_model(kRiskKey, to_json(edit.model), sv, edit.model.version, edit.entry);
  return edit.model;
}

ProjectModel CoachService::revise_area(const std::string& author, const std::string& id, const AreaPatch& patch,
                                       std::optional<std::int64_t> expected_version) {
  std::lock_guard lock(model_mu_);
  auto [model, sv] = load_model<ProjectModel>(kProjectKey);
  check_expected(kProjectKey, expected_version, model.version);
  auto edit = coach::revise_area(model, id, patch, stamp(author));
  commit_model(kProjectKey, to_json(edit.model), sv, edit.model.version, edit.entry);
  return edit.model;
}

AuditLog CoachService::model_audit() {
  auto rec = store_.find({std::string(kAudits), kModelAuditKey});
  return rec ? AuditLog::from_ndjson(rec->body) : AuditLog{};
}

std::string CoachService::gateway_audit(const std::string& session_id) {
  auto rec = store_.find({std::string(kGatewayAudits), session_id});
  return rec ? rec->body : std::string();
}

// --- sessions -------------------------------------------------------------

CoachService::Loaded CoachService::load_bundle(const std::string& session_id) {
  const auto rec = store_.get({std::string(kSessions), session_id});
  return {session_bundle_from_json(parse_body(rec)), rec.version};
}

void CoachService::save_bundle(const SessionBundle& b, std::int64_t expected) {
  store_.put({std::string(kSessions), b.session.id}, to_json(b).dump(), expected);
}

void CoachService::flush_gateway(const std::string& session_id, Gateway& gateway) {
  std::string lines;
  for (const auto& r : gateway.take_records()) lines += to_json(r).dump() + "\n";
  if (!lines.empty()) store_.append({std::string(kGatewayAudits), session_id}, lines);
}

SessionBundle CoachService::load(const std::string& session_id) { return load_bundle(session_id).bundle; }

std::optional<MentorGoals> CoachService::goals(const std::string& session_id) {
  auto rec = store_.find({std::string(kGoals), session_id});
  if (!rec) return std::nullopt;
  return mentor_goals_from_json(parse_body(*rec));
}

std::vector<RecordSummary> CoachService::list_sessions(const ListFilter& filter) {
  return store_.list(kSessions, filter);
}

Turn CoachService::create_session(const std::string& novice_id) {
  const auto model = current_model();
  SessionBundle b;
  b.session = engine_.create_session(novice_id, model.project, model.risk);
  save_bundle(b, 0);
  return {b, b.session.transcript};
}

Session CoachService::advance(Session s, const CoachingModel& model, Pipeline& pipeline) {
  const auto& project = model.project;
  while (true) {
    if (s.phase == Phase::eliciting || s.phase == Phase::diagnosing) {
      for (const auto& area : project.areas) {
        if (area.id == kEmotionsAreaId || !area_settled(s, area) || s.is_thin(area.id) || has_context_for(s, area.id)) {
          continue;
        }
        const auto segment = area_segment(s, area.id);
        if (segment.empty()) continue;
        try {
          s = engine_.attach_context(s, project, pipeline.extract_context(model, area, segment, s.context));
        } catch (const Error& e) {
          if (e.code() != Errc::extraction_empty) throw;
          s = engine_.mark_thin_context(s, project, area.id);
        }
      }
    }

    const auto action = next_action(s, project);
    if (const auto* ask = std::get_if<AskAreaQuestion>(&action)) {
      if (pending_question(s)) return s;
      const auto* area = project.find(ask->area_id);
      return engine_.ask_area_question(s, project, pipeline.personalize_question(model, *area, s.context));
    }
    if (std::holds_alternative<RunDiagnosis>(action)) {
      auto diagnoses = pipeline.diagnose(model, s.context, area_answers(s));
      s = engine_.attach_diagnoses(s, project, model.risk, diagnoses);
      continue;
    }
    if (const auto* ask = std::get_if<AskReflectionQuestion>(&action)) {
      if (pending_question(s)) return s;
      auto it = std::find_if(s.diagnoses.begin(), s.diagnoses.end(),
                             [&](const Diagnosis& d) { return d.risk_id == ask->risk_id; });
      return engine_.ask_reflection(s, pipeline.reflection_questions(model, *it, s.context));
    }
    return s;
  }
}

Turn CoachService::post_message(const std::string& session_id, const std::string& text,
                                const std::optional<std::string>& idempotency_key) {
  auto mu = lock_for(session_id);
  std::lock_guard lock(*mu);
  auto [bundle, version] = load_bundle(session_id);

  if (idempotency_key) {
    if (auto it = bundle.idempotency.find(*idempotency_key); it != bundle.idempotency.end()) {
      Turn replay{bundle, {}};
      for (const auto& seq : it->second.at("seqs")) {
        for (const auto& m : bundle.session.transcript)
          if (m.seq == seq.get<std::int64_t>()) replay.messages.push_back(m);
      }
      return replay;
    }
  }

  const auto model = model_at(bundle.session.project_model_version, bundle.session.risk_model_version);
  Gateway gateway(backend_, options_.clock);
  Pipeline pipeline(gateway, options_.clock, options_.pipeline);
  const auto before = bundle.session.transcript.size();
  Session s;
  try {
    s = engine_.record_novice_message(bundle.session, model.project, text);
    s = advance(std::move(s), model, pipeline);
  } catch (...) {
    flush_gateway(session_id, gateway);
    std::lock_guard elock(events_mu_);
    last_events_ = pipeline.events();
    throw;
  }
  flush_gateway(session_id, gateway);
  {
    std::lock_guard elock(events_mu_);
    last_events_ = pipeline.events();
  }

  Turn turn;
  turn.messages.assign(s.transcript.begin() + static_cast<std::ptrdiff_t>(before), s.transcript.end());
  bundle.session = std::move(s);
  if (idempotency_key) {
    json seqs = json::array();
    for (const auto& m : turn.messages) seqs.push_back(m.seq);
    bundle.idempotency[*idempotency_key] = json{{"seqs", seqs}};
  }
  save_bundle(bundle, version);
  turn.bundle = std::move(bundle);
  return turn;
}

std::vector<StrategySuggestion> CoachService::strategies_for(const Session& s, const CoachingModel& model,
                                                             Pipeline& pipeline) {
  return pipeline.suggest_strategies(model, s, goals(s.id));
}

SessionBundle CoachService::set_agenda(const std::string& session_id, const std::vector<std::string>& selected,
                                       const std::string& notes) {
  auto mu = lock_for(session_id);
  std::lock_guard lock(*mu);
  auto [bundle, version] = load_bundle(session_id);
  const auto model = model_at(bundle.session.project_model_version, bundle.session.risk_model_version);
  auto s = engine_.set_agenda(bundle.session, selected, notes);

  Gateway gateway(backend_, options_.clock);
  Pipeline pipeline(gateway, options_.clock, options_.pipeline);
  try {
    bundle.agenda_document = pipeline.synthesize_agenda(model, s);
    bundle.strategies = strategies_for(s, model, pipeline);
  } catch (...) {
    flush_gateway(session_id, gateway);
    throw;
  }
  flush_gateway(session_id, gateway);
  bundle.session = std::move(s);
  save_bundle(bundle, version);
  return bundle;
}

MentorGoals CoachService::set_goals(const std::string& session_id, const std::vector<std::string>& focus_risk_ids,
                                    const std::string& desired_outcomes) {
  auto mu = lock_for(session_id);
  std::lock_guard lock(*mu);
  auto [bundle, version] = load_bundle(session_id);
  if (bundle.session.phase < Phase::reflecting) {
    throw Error(Errc::wrong_phase, "goals need a diagnosed session; session is " +
                                       std::string(to_string(bundle.session.phase)));
  }
  MentorGoals g{session_id, focus_risk_ids, desired_outcomes, options_.clock()};
  check_goals(bundle.session, g);

  const bool refresh = bundle.session.phase == Phase::complete;
  if (refresh) {
    const auto model = model_at(bundle.session.project_model_version, bundle.session.risk_model_version);
    Gateway gateway(backend_, options_.clock);
    Pipeline pipeline(gateway, options_.clock, options_.pipeline);
    try {
      bundle.strategies = pipeline.suggest_strategies(model, bundle.session, g);
    } catch (...) {
      flush_gateway(session_id, gateway);
      throw;
    }
    flush_gateway(session_id, gateway);
  }
  store_.put({std::string(kGoals), session_id}, to_json(g).dump());
  if (refresh) save_bundle(bundle, version);
  return g;
}

SessionBundle CoachService::rediagnose(const std::string& session_id) {
  auto mu = lock_for(session_id);
  std::lock_guard lock(*mu);
  auto [bundle, version] = load_bundle(session_id);
  const auto& s0 = bundle.session;
  if (s0.phase != Phase::diagnosing && s0.phase != Phase::reflecting && s0.phase != Phase::prioritizing) {
    throw Error(Errc::wrong_phase, "re-diagnosis is not possible in phase " + std::string(to_string(s0.phase)));
  }
  if (auto p = pending_question(s0); p && p->risk_id) {
    throw Error(Errc::wrong_phase, "re-diagnosis is not possible while a reflection question is pending");
  }
  const auto current = current_model();
  const CoachingModel model{model_at(s0.project_model_version, current.risk.version).project, current.risk};

  Gateway gateway(backend_, options_.clock);
  Pipeline pipeline(gateway, options_.clock, options_.pipeline);
  Session s;
  try {
    s = engine_.rediagnose(s0, model.risk, pipeline.diagnose(model, s0.context, area_answers(s0)));
    s = advance(std::move(s), model, pipeline);
  } catch (...) {
    flush_gateway(session_id, gateway);
    throw;
  }
  flush_gateway(session_id, gateway);
  bundle.session = std::move(s);
  save_bundle(bundle, version);
  return bundle;
}

NoviceDashboard CoachService::novice_dashboard(const std::string& session_id) {
  const auto b = load(session_id);
  return build_novice_dashboard(b.session, model_at(b.session.project_model_version, b.session.risk_model_version));
}

MentorDashboard CoachService::mentor_dashboard(const std::string& session_id) {
  const auto b = load(session_id);
  return build_mentor_dashboard(b.session, model_at(b.session.project_model_version, b.session.risk_model_version),
                                goals(session_id), b.strategies);
}

}  // namespace coach
