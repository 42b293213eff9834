#include "envirollm/clients.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "envirollm/errors.hpp"

namespace envirollm {
namespace {

using json = nlohmann::json;
using steady = std::chrono::steady_clock;

std::pair<time_t, time_t> split_seconds(double seconds) {
  const double whole = std::floor(seconds);
  return {static_cast<time_t>(whole), static_cast<time_t>((seconds - whole) * 1e6)};
}

std::unique_ptr<httplib::Client> make_client(const Endpoint& ep, const ClientOptions& options) {
  auto client = std::make_unique<httplib::Client>(ep.host, ep.port);
  const auto [cs, cus] = split_seconds(options.connect_timeout_s);
  const auto [rs, rus] = split_seconds(options.timeout_s);
  client->set_connection_timeout(cs, cus);
  client->set_read_timeout(rs, rus);
  client->set_write_timeout(rs, rus);
  client->set_keep_alive(false);
  return client;
}

double seconds_since(steady::time_point start) {
  return std::chrono::duration<double>(steady::now() - start).count();
}

[[noreturn]] void throw_transport(httplib::Error err, double elapsed, const ClientOptions& options,
                                  const std::string& url) {
  const auto what = httplib::to_string(err);
  if (err == httplib::Error::Read && elapsed >= 0.9 * options.timeout_s) {
    throw InferenceTimeout("no response from " + url + " within " +
                           std::to_string(options.timeout_s) + " s");
  }
  throw EndpointUnreachable("cannot reach " + url + ": " + what);
}

std::string error_message(const std::string& body) {
  try {
    const auto j = json::parse(body);
    if (j.contains("error")) {
      const auto& e = j["error"];
      if (e.is_string()) {
        return e.get<std::string>();
      }
      if (e.is_object() && e.contains("message") && e["message"].is_string()) {
        return e["message"].get<std::string>();
      }
      return e.dump();
    }
  } catch (const json::exception&) {
  }
  return body.substr(0, 200);
}

[[noreturn]] void throw_status(int status, const std::string& body, std::string_view model,
                               const std::string& url) {
  const auto message = error_message(body);
  if (status == 404 || message.find("not found") != std::string::npos ||
      message.find("model_not_found") != std::string::npos) {
    throw ModelNotFound("model '" + std::string(model) + "' not found at " + url + ": " + message);
  }
  throw Error("HTTP " + std::to_string(status) + " from " + url + ": " + message);
}

struct Exchange {
  int status = 0;
  std::string body;
};

Exchange post_json(const Endpoint& ep, const ClientOptions& options, const std::string& path,
                   const json& payload, const httplib::Headers& headers = {}) {
  auto client = make_client(ep, options);
  httplib::Request req;
  req.method = "POST";
  req.path = path;
  req.headers = headers;
  req.set_header("Content-Type", "application/json");
  req.body = payload.dump();
  std::string received;
  req.content_receiver = [&received](const char* data, size_t len, uint64_t, uint64_t) {
    received.append(data, len);
    return true;
  };
  const auto start = steady::now();
  auto res = client->send(req);
  if (!res) {
    throw_transport(res.error(), seconds_since(start), options, ep.origin() + path);
  }
  return {res->status, received.empty() ? res->body : received};
}

json parse_body(const std::string& body, const std::string& url) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw MalformedResponse("invalid JSON from " + url + ": " + e.what());
  }
}

std::optional<std::int64_t> int_field(const json& j, const char* key) {
  if (j.contains(key) && j[key].is_number()) {
    const auto v = j[key].get<double>();
    if (v >= 0) {
      return static_cast<std::int64_t>(v);
    }
  }
  return std::nullopt;
}

}  // namespace

Endpoint Endpoint::parse(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme) {
    throw std::invalid_argument("only http:// endpoints are supported: " + std::string(url));
  }
  auto rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  auto authority = rest.substr(0, slash);
  std::string path = slash == std::string_view::npos ? "" : std::string(rest.substr(slash));
  while (!path.empty() && path.back() == '/') {
    path.pop_back();
  }
  Endpoint ep;
  ep.base_path = path;
  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    ep.host = std::string(authority.substr(0, colon));
    const auto port_text = std::string(authority.substr(colon + 1));
    try {
      std::size_t used = 0;
      ep.port = std::stoi(port_text, &used);
      if (used != port_text.size() || ep.port <= 0 || ep.port > 65535) {
        throw std::invalid_argument("port");
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("invalid port in URL: " + std::string(url));
    }
  } else {
    ep.host = std::string(authority);
  }
  if (ep.host.empty()) {
    throw std::invalid_argument("missing host in URL: " + std::string(url));
  }
  return ep;
}

std::string Endpoint::origin() const { return "http://" + host + ":" + std::to_string(port); }

std::string Endpoint::url() const { return origin() + base_path; }

OllamaClient::OllamaClient(std::string base_url, ClientOptions options)
    : base_url_(std::move(base_url)), endpoint_(Endpoint::parse(base_url_)), options_(options) {}

void OllamaClient::ping() const {
  auto opts = options_;
  opts.timeout_s = std::min(opts.timeout_s, 10.0);
  auto client = make_client(endpoint_, opts);
  const auto start = steady::now();
  auto res = client->Get(endpoint_.base_path + "/api/tags");
  if (!res) {
    throw_transport(res.error(), seconds_since(start), opts, base_url_);
  }
}

Completion OllamaClient::generate(std::string_view model, std::string_view prompt) const {
  json payload{{"model", model}, {"prompt", prompt}, {"stream", options_.stream}};
  if (options_.temperature) {
    payload["options"] = {{"temperature", *options_.temperature}};
  }
  const auto path = endpoint_.base_path + "/api/generate";
  const auto url = endpoint_.origin() + path;
  const auto ex = post_json(endpoint_, options_, path, payload);
  if (ex.status < 200 || ex.status >= 300) {
    throw_status(ex.status, ex.body, model, url);
  }

  // Non-streaming replies are one object; streaming replies are one object
  // per line with the statistics on the final "done" line.
  Completion out;
  json final_object;
  bool any = false;
  std::istringstream lines(ex.body);
  for (std::string line; std::getline(lines, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const auto j = parse_body(line, url);
    if (j.contains("error")) {
      throw_status(500, line, model, url);
    }
    if (!j.contains("response") || !j["response"].is_string()) {
      throw MalformedResponse("reply from " + url + " has no response text");
    }
    out.text += j["response"].get<std::string>();
    final_object = j;
    any = true;
  }
  if (!any) {
    throw MalformedResponse("empty reply from " + url);
  }
  out.tokens = int_field(final_object, "eval_count");
  if (auto ns = int_field(final_object, "eval_duration"); ns && *ns > 0) {
    out.generation_s = static_cast<double>(*ns) / 1e9;
  }
  return out;
}

std::optional<std::string> OllamaClient::model_metadata(std::string_view model) const {
  auto opts = options_;
  opts.timeout_s = std::min(opts.timeout_s, 30.0);
  try {
    const auto path = endpoint_.base_path + "/api/show";
    const auto ex = post_json(endpoint_, opts, path, json{{"model", model}, {"name", model}});
    if (ex.status != 200) {
      return std::nullopt;
    }
    const auto j = json::parse(ex.body);
    if (j.contains("details") && j["details"].is_object()) {
      const auto& d = j["details"];
      if (d.contains("quantization_level") && d["quantization_level"].is_string()) {
        return d["quantization_level"].get<std::string>();
      }
    }
    return std::nullopt;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

OpenAiClient::OpenAiClient(std::string base_url, ClientOptions options, std::string api_key)
    : base_url_(std::move(base_url)),
      endpoint_(Endpoint::parse(base_url_)),
      options_(options),
      api_key_(std::move(api_key)) {}

std::string OpenAiClient::api_path(std::string_view suffix) const {
  const auto& base = endpoint_.base_path;
  const bool has_version = base.size() >= 3 && base.compare(base.size() - 3, 3, "/v1") == 0;
  return (has_version ? base : base + "/v1") + std::string(suffix);
}

void OpenAiClient::ping() const {
  auto opts = options_;
  opts.timeout_s = std::min(opts.timeout_s, 10.0);
  auto client = make_client(endpoint_, opts);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  const auto start = steady::now();
  auto res = client->Get(api_path("/models"), headers);
  if (!res) {
    throw_transport(res.error(), seconds_since(start), opts, base_url_);
  }
}

Completion OpenAiClient::chat(std::string_view model, std::string_view prompt) const {
  json payload{{"model", model},
               {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
               {"stream", options_.stream}};
  if (options_.stream) {
    payload["stream_options"] = {{"include_usage", true}};
  }
  if (options_.temperature) {
    payload["temperature"] = *options_.temperature;
  }
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  const auto path = api_path("/chat/completions");
  const auto url = endpoint_.origin() + path;
  const auto ex = post_json(endpoint_, options_, path, payload, headers);
  if (ex.status < 200 || ex.status >= 300) {
    throw_status(ex.status, ex.body, model, url);
  }

  Completion out;
  bool has_content = false;
  auto take_usage = [&out](const json& j) {
    if (j.contains("usage") && j["usage"].is_object()) {
      out.tokens = int_field(j["usage"], "completion_tokens");
    }
  };

  if (!options_.stream) {
    const auto j = parse_body(ex.body, url);
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
      const auto& choice = j["choices"][0];
      if (choice.contains("message") && choice["message"].contains("content") &&
          choice["message"]["content"].is_string()) {
        out.text = choice["message"]["content"].get<std::string>();
        has_content = true;
      }
    }
    take_usage(j);
  } else {
    std::istringstream lines(ex.body);
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty() && line.back() == '\r') {
        line.pop_back();
      }
      if (line.rfind("data:", 0) != 0) {
        continue;
      }
      auto data = line.substr(5);
      if (!data.empty() && data.front() == ' ') {
        data.erase(0, 1);
      }
      if (data == "[DONE]") {
        break;
      }
      const auto j = parse_body(data, url);
      if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const auto& delta = j["choices"][0].value("delta", json::object());
        if (delta.contains("content") && delta["content"].is_string()) {
          out.text += delta["content"].get<std::string>();
          has_content = true;
        }
      }
      take_usage(j);
    }
  }
  if (!has_content && !out.tokens) {
    throw MalformedResponse("completion from " + url + " has neither content nor usage");
  }
  return out;
}

std::optional<std::string> OpenAiClient::model_metadata(std::string_view model) const {
  ClientOptions opts = options_;
  opts.timeout_s = 2.0;
  opts.connect_timeout_s = 2.0;
  try {
    auto client = make_client(endpoint_, opts);
    auto res = client->Get("/api/v0/models/" + std::string(model));
    if (!res || res->status != 200) {
      return std::nullopt;
    }
    const auto j = json::parse(res->body);
    if (j.contains("quantization") && j["quantization"].is_string()) {
      return j["quantization"].get<std::string>();
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace envirollm
