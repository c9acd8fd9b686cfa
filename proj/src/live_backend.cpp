#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "coach/error.hpp"
#include "coach/gateway.hpp"

namespace coach {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base;    // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError(std::vector<FieldError>{{"endpoint", "expected an absolute URL, got " + url}});
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.base = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.base.empty() && e.base.back() == '/') e.base.pop_back();
  return e;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

LiveConfig live_config_from_env() {
  LiveConfig c;
  c.endpoint = env_or("COACH_LLM_ENDPOINT", "");
  c.credential = env_or("COACH_LLM_API_KEY", "");
  c.model = env_or("COACH_LLM_MODEL", "");
  c.timeout = std::chrono::milliseconds(std::stoll(env_or("COACH_LLM_TIMEOUT_MS", "60000")));
  c.retries = std::stoi(env_or("COACH_LLM_RETRIES", "2"));
  return c;
}

LiveConfig live_config_from_json(const json& doc) {
  LiveConfig c;
  c.endpoint = doc.value("endpoint", "");
  c.model = doc.value("model", "");
  if (doc.contains("credential")) {
    c.credential = doc["credential"].get<std::string>();
  } else if (doc.contains("credential_env")) {
    c.credential = env_or(doc["credential_env"].get<std::string>().c_str(), "");
  }
  c.timeout = std::chrono::milliseconds(doc.value("timeout_ms", std::int64_t{60000}));
  c.retries = doc.value("retries", 2);
  c.backoff = std::chrono::milliseconds(doc.value("backoff_ms", std::int64_t{200}));
  return c;
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
  std::vector<FieldError> errors;
  if (config_.endpoint.empty()) errors.push_back({"endpoint", "must be configured"});
  if (config_.model.empty()) errors.push_back({"model", "must be configured"});
  if (config_.retries < 0) errors.push_back({"retries", "must be >= 0"});
  if (!errors.empty()) throw ValidationError(std::move(errors));
  split_endpoint(config_.endpoint);
}

CompletionResponse LiveBackend::complete(const CompletionRequest& request) {
  using namespace std::chrono;
  const auto endpoint = split_endpoint(config_.endpoint);
  const auto start = steady_clock::now();
  const auto deadline = start + std::min(request.deadline, config_.timeout);

  json body{{"model", config_.model},
            {"messages",
             json::array({{{"role", "system"}, {"content", request.prompt.system_instructions}},
                          {{"role", "user"}, {"content", request.prompt.text()}}})},
            {"temperature", 0},
            {"max_tokens", request.max_output_units}};
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.credential.empty()) headers.emplace("Authorization", "Bearer " + config_.credential);

  int attempt = 0;
  auto backoff = config_.backoff;
  while (true) {
    ++attempt;
    last_attempts_ = attempt;
    const auto remaining = duration_cast<microseconds>(deadline - steady_clock::now());
    if (remaining.count() <= 0) throw BackendError(Errc::timeout, "deadline exceeded before attempt " + std::to_string(attempt));

    httplib::Client client(endpoint.origin);
    const auto secs = duration_cast<seconds>(remaining);
    const auto usecs = (remaining - secs).count();
    client.set_connection_timeout(secs.count(), usecs);
    client.set_read_timeout(secs.count(), usecs);
    client.set_write_timeout(secs.count(), usecs);

    auto result = client.Post(endpoint.base + "/chat/completions", headers, payload, "application/json");
    if (!result) {
      if (steady_clock::now() >= deadline) {
        throw BackendError(Errc::timeout, "no response within " + std::to_string(request.deadline.count()) + "ms");
      }
      const std::string what = httplib::to_string(result.error());
      if (attempt > config_.retries) {
        throw BackendError(Errc::transport_error,
                           "transport failure after " + std::to_string(attempt) + " attempts: " + what);
      }
      const auto pause = std::min(duration_cast<milliseconds>(deadline - steady_clock::now()), backoff);
      std::this_thread::sleep_for(pause);
      backoff *= 2;
      continue;
    }

    if (result->status < 200 || result->status >= 300) {
      throw BackendError(Errc::backend_refused, "backend answered HTTP " + std::to_string(result->status),
                         result->status, result->body);
    }
    json doc = json::parse(result->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
      throw BackendError(Errc::backend_refused, "malformed completion body", result->status, result->body);
    }
    const auto& choice = doc["choices"][0];
    CompletionResponse out;
    try {
      out.text = choice.at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw BackendError(Errc::backend_refused, "completion has no message content", result->status, result->body);
    }
    out.backend_id = id();
    out.truncated = choice.value("finish_reason", "") == "length";
    out.latency = duration_cast<milliseconds>(steady_clock::now() - start);
    return out;
  }
}

}  // namespace coach
