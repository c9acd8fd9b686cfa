#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "coach/gateway.hpp"
#include "coach/service.hpp"

namespace coach {

enum class Role { mentor, novice };

std::string_view to_string(Role r);

struct Principal {
  std::string user_id;
  Role role = Role::novice;
};

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path store_root = "coach-store";
  std::string backend = "live";             // same forms as make_backend
  std::optional<LiveConfig> live;           // overrides the environment for "live"
  std::map<std::string, Principal> tokens;  // bearer token -> principal
};

// {"listen": "127.0.0.1:8080", "store": DIR, "backend": SPEC,
//  "live": {...}, "tokens": {TOKEN: {"user_id": U, "role": "mentor"|"novice"}}}
ApiConfig api_config_from_json(const json& doc);
ApiConfig load_api_config(const std::filesystem::path& path);

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct ApiResponse {
  int status = 200;
  json body;
};

// HTTP status for an error code.
int http_status(Errc code);

// Transport-independent request handling: authentication, the role wall,
// routing and error mapping. The HTTP server is a thin adapter over this.
class ApiRouter {
 public:
  ApiRouter(CoachService& service, std::map<std::string, Principal> tokens);

  ApiResponse handle(const ApiRequest& request);

  struct RouteInfo {
    std::string method;
    std::string pattern;
    bool mentor = false;
    bool novice = false;
  };
  // Every route, with the roles allowed past the role wall.
  static std::vector<RouteInfo> routes();

 private:
  CoachService& service_;
  std::map<std::string, Principal> tokens_;
};

// Blocks serving the router over HTTP.
void serve(ApiRouter& router, const std::string& host, int port);

}  // namespace coach
