#include "coach/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "coach/error.hpp"

namespace coach {

namespace {

std::string response_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::fixture_parse_error, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::fixture_parse_error, path.string() + " is not valid JSON");
  return doc;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

// --- scripted -------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries, std::string name)
    : entries_(std::move(entries)), name_(std::move(name)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& fixture, std::string name) {
  if (!fixture.is_object() || !fixture.contains("entries") || !fixture["entries"].is_array()) {
    throw Error(Errc::fixture_parse_error, "script fixture must be an object with an \"entries\" list");
  }
  std::vector<ScriptEntry> entries;
  for (std::size_t i = 0; i < fixture["entries"].size(); ++i) {
    const auto& e = fixture["entries"][i];
    if (!e.is_object() || !e.contains("task") || !e["task"].is_string() || !e.contains("response")) {
      throw Error(Errc::fixture_parse_error, "script entry " + std::to_string(i) + " needs task and response");
    }
    try {
      entries.push_back({prompt_task_from_string(e["task"].get<std::string>()), response_text(e["response"])});
    } catch (const ValidationError& err) {
      throw Error(Errc::fixture_parse_error, "script entry " + std::to_string(i) + ": " + err.what());
    }
  }
  return std::make_unique<ScriptedBackend>(std::move(entries), std::move(name));
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::load_script(const std::filesystem::path& fixture) {
  return from_json(read_json_file(fixture), fixture.stem().string());
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
  std::lock_guard lock(mu_);
  if (next_ >= entries_.size()) {
    throw Error(Errc::script_mismatch, "script exhausted after " + std::to_string(entries_.size()) +
                                           " entries; unexpected " + std::string(to_string(request.task)) + " request");
  }
  const auto& entry = entries_[next_];
  if (entry.task != request.task) {
    throw Error(Errc::script_mismatch, "script entry " + std::to_string(next_) + " expects " +
                                           std::string(to_string(entry.task)) + " but request is " +
                                           std::string(to_string(request.task)));
  }
  ++next_;
  return {entry.response, id(), std::chrono::milliseconds(0), false};
}

std::size_t ScriptedBackend::served() const {
  std::lock_guard lock(mu_);
  return next_;
}

bool ScriptedBackend::exhausted() const {
  std::lock_guard lock(mu_);
  return next_ == entries_.size();
}

// --- rule mock ------------------------------------------------------------

std::string mock_tag_value(std::string_view captured) {
  std::string v = trim(captured);
  while (!v.empty() && (v.back() == '.' || v.back() == '!')) v.pop_back();
  v = trim(v);
  if (!v.empty()) v[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(v[0])));
  return v;
}

RuleMockBackend::RuleMockBackend(const json& tables) {
  if (!tables.is_object()) throw Error(Errc::fixture_parse_error, "mock tables must be an object keyed by task");
  for (const auto& [name, table] : tables.items()) {
    PromptTask task;
    try {
      task = prompt_task_from_string(name);
    } catch (const ValidationError&) {
      throw Error(Errc::fixture_parse_error, "mock table for unknown task \"" + name + "\"");
    }
    Table t;
    for (const auto& r : table.value("rules", json::array())) {
      Rule rule;
      rule.source = r.value("pattern", "");
      try {
        rule.pattern = std::regex(rule.source, std::regex::ECMAScript | std::regex::icase);
      } catch (const std::regex_error& e) {
        throw Error(Errc::fixture_parse_error, "bad pattern \"" + rule.source + "\": " + e.what());
      }
      if (task == PromptTask::context_tagging) rule.target = r.value("key", "");
      if (task == PromptTask::risk_diagnosis) rule.target = r.value("risk_id", "");
      rule.output = r.value("output", json());
      t.rules.push_back(std::move(rule));
    }
    if (table.contains("default")) t.fallback = table["default"];
    tables_.emplace(task, std::move(t));
  }
}

std::unique_ptr<RuleMockBackend> RuleMockBackend::load(const std::filesystem::path& tables) {
  return std::make_unique<RuleMockBackend>(read_json_file(tables));
}

std::string RuleMockBackend::tagging(const Table& t, const RenderedPrompt& p) const {
  static const std::regex line_re(R"(^\[ref:(\d+)\] (.*)$)");
  json entries = json::array();
  for (const auto& line : lines_of(p.user_block)) {
    std::smatch lm;
    if (!std::regex_match(line, lm, line_re)) continue;
    const auto seq = std::stoll(lm[1].str());
    const std::string text = lm[2].str();
    for (const auto& rule : t.rules) {
      std::smatch m;
      if (!std::regex_search(text, m, rule.pattern)) continue;
      const std::string captured = m.size() > 1 && m[1].matched ? m[1].str() : text;
      entries.push_back({{"key", rule.target}, {"value", mock_tag_value(captured)}, {"source_seq", seq}});
    }
  }
  return json{{"entries", entries}}.dump();
}

std::string RuleMockBackend::diagnosis(const Table& t, const RenderedPrompt& p) const {
  static const std::regex line_re(R"(^(.+?): (.*) \[ref:(\d+)\]$)");
  struct Hit {
    std::string value;
    std::int64_t seq;
  };
  std::vector<Hit> hits;
  for (const auto& line : lines_of(p.context_block)) {
    std::smatch lm;
    if (std::regex_match(line, lm, line_re)) hits.push_back({lm[2].str(), std::stoll(lm[3].str())});
  }
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::string, std::set<std::int64_t>>> found;
  for (const auto& rule : t.rules) {
    for (const auto& h : hits) {
      if (!std::regex_search(h.value, rule.pattern)) continue;
      auto [it, inserted] = found.try_emplace(rule.target);
      if (inserted) {
        order.push_back(rule.target);
        it->second.first = h.value;
      }
      it->second.second.insert(h.seq);
    }
  }
  json diagnoses = json::array();
  for (const auto& id : order) {
    const auto& [value, seqs] = found[id];
    diagnoses.push_back({{"risk_id", id},
                         {"rationale", "The novice said \"" + value + "\", which points to the " + id + " risk."},
                         {"evidence", std::vector<std::int64_t>(seqs.begin(), seqs.end())}});
  }
  return json{{"diagnoses", diagnoses}}.dump();
}

std::string RuleMockBackend::first_match(const Table& t, const RenderedPrompt& p) const {
  const std::string haystack = p.context_block + "\n" + p.user_block;
  for (const auto& rule : t.rules) {
    if (std::regex_search(haystack, rule.pattern)) return response_text(rule.output);
  }
  return t.fallback ? response_text(*t.fallback) : std::string("{}");
}

CompletionResponse RuleMockBackend::complete(const CompletionRequest& request) {
  auto it = tables_.find(request.task);
  if (it == tables_.end()) {
    throw Error(Errc::uncovered_task, "rule mock has no table for " + std::string(to_string(request.task)));
  }
  std::string text;
  switch (request.task) {
    case PromptTask::context_tagging: text = tagging(it->second, request.prompt); break;
    case PromptTask::risk_diagnosis: text = diagnosis(it->second, request.prompt); break;
    default: text = first_match(it->second, request.prompt); break;
  }
  return {std::move(text), id(), std::chrono::milliseconds(0), false};
}

// --- gateway --------------------------------------------------------------

json to_json(const GatewayRecord& r) {
  return json{{"schema_version", 1},
              {"at", format_timestamp(r.at)},
              {"task", r.task},
              {"prompt_hash", r.prompt_hash},
              {"template_hash", r.template_hash},
              {"backend_id", r.backend_id},
              {"latency_ms", r.latency_ms},
              {"truncated", r.truncated},
              {"attempt", r.attempt},
              {"outcome", r.outcome}};
}

Gateway::Gateway(Backend& backend, Clock clock) : backend_(backend), clock_(std::move(clock)) {}

CompletionResponse Gateway::complete(const CompletionRequest& request) {
  if (request.deadline.count() <= 0) throw ValidationError(std::vector<FieldError>{{"deadline", "must be positive"}});
  if (request.attempt < 0) throw ValidationError(std::vector<FieldError>{{"attempt", "must be >= 0"}});

  GatewayRecord rec;
  rec.task = std::string(to_string(request.task));
  rec.prompt_hash = request.prompt.hash();
  rec.template_hash = request.prompt.template_hash;
  rec.backend_id = backend_.id();
  rec.attempt = request.attempt;
  rec.at = clock_();

  auto finish = [&](std::string outcome, std::chrono::milliseconds latency, bool truncated) {
    rec.outcome = std::move(outcome);
    rec.latency_ms = latency.count();
    rec.truncated = truncated;
    std::lock_guard lock(mu_);
    records_.push_back(rec);
  };

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  };
  try {
    auto response = backend_.complete(request);
    if (response.backend_id.empty()) response.backend_id = backend_.id();
    response.latency = elapsed();
    finish("ok", response.latency, response.truncated);
    return response;
  } catch (BackendError& e) {
    e.task = rec.task;
    e.audit_hash = rec.prompt_hash;
    finish(std::string(e.reason()), elapsed(), false);
    throw;
  } catch (const Error& e) {
    finish(std::string(e.reason()), elapsed(), false);
    throw;
  }
}

std::vector<GatewayRecord> Gateway::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<GatewayRecord> Gateway::take_records() {
  std::lock_guard lock(mu_);
  return std::exchange(records_, {});
}

std::unique_ptr<Backend> make_backend(std::string_view spec) {
  if (spec.rfind("scripted:", 0) == 0) return ScriptedBackend::load_script(std::string(spec.substr(9)));
  if (spec.rfind("mock:", 0) == 0) return RuleMockBackend::load(std::string(spec.substr(5)));
  if (spec == "live") return std::make_unique<LiveBackend>(live_config_from_env());
  throw ValidationError(std::vector<FieldError>{{"backend", "expected scripted:FIXTURE, mock:TABLE or live, got \"" + std::string(spec) + "\""}});
}

}  // namespace coach
