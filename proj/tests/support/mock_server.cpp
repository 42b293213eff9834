#include "mock_server.hpp"

#include <chrono>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace envirollm::testing {
namespace {

using json = nlohmann::json;

std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    out.push_back(w + " ");
  }
  if (out.empty()) {
    out.push_back(text);
  }
  return out;
}

}  // namespace

ScriptedReply judge_reply(int score) {
  return {"accuracy (factual correctness)", "Score: " + std::to_string(score), 3, 0, std::nullopt};
}

MockInferenceServer::MockInferenceServer(MockServerOptions options)
    : options_(std::move(options)),
      report_usage_(options_.report_usage),
      server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;

  s.Get("/api/tags", [this](const httplib::Request&, httplib::Response& res) {
    json models = json::array();
    for (const auto& m : options_.models) {
      models.push_back({{"name", m}});
    }
    res.set_content(json{{"models", models}}.dump(), "application/json");
  });

  s.Post("/api/show", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body, nullptr, false);
    const auto model = body.value("model", body.value("name", std::string()));
    if (!known(model)) {
      res.status = 404;
      res.set_content(json{{"error", "model '" + model + "' not found"}}.dump(), "application/json");
      return;
    }
    json details = json::object();
    if (auto it = options_.quants.find(model); it != options_.quants.end()) {
      details["quantization_level"] = it->second;
    }
    res.set_content(json{{"details", details}}.dump(), "application/json");
  });

  s.Post("/api/generate", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      return;
    }
    const auto model = body.value("model", std::string());
    const auto prompt = body.value("prompt", std::string());
    record({req.path, model, prompt});
    if (!known(model)) {
      res.status = 404;
      res.set_content(json{{"error", "model '" + model + "' not found"}}.dump(), "application/json");
      return;
    }
    const auto* reply = find(prompt);
    if (!reply) {
      res.status = 500;
      res.set_content(json{{"error", "no scripted reply"}}.dump(), "application/json");
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(reply->delay_ms));
    json final_chunk{{"model", model}, {"done", true}};
    if (report_usage_) {
      final_chunk["eval_count"] = reply->completion_tokens;
      if (reply->eval_duration_ms) {
        final_chunk["eval_duration"] = *reply->eval_duration_ms * 1'000'000;
      }
    }
    if (body.value("stream", true)) {
      std::string ndjson;
      for (const auto& w : words(reply->response_text)) {
        ndjson += json{{"model", model}, {"response", w}, {"done", false}}.dump() + "\n";
      }
      final_chunk["response"] = "";
      ndjson += final_chunk.dump() + "\n";
      res.set_content(ndjson, "application/x-ndjson");
      return;
    }
    final_chunk["response"] = reply->response_text;
    res.set_content(final_chunk.dump(), "application/json");
  });

  s.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
    json data = json::array();
    for (const auto& m : options_.models) {
      data.push_back({{"id", m}, {"object", "model"}});
    }
    res.set_content(json{{"object", "list"}, {"data", data}}.dump(), "application/json");
  });

  s.Get(R"(/api/v0/models/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string model = req.matches[1];
    auto it = options_.quants.find(model);
    if (!known(model) || it == options_.quants.end()) {
      res.status = 404;
      return;
    }
    res.set_content(json{{"id", model}, {"quantization", it->second}}.dump(), "application/json");
  });

  s.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages")) {
      res.status = 400;
      return;
    }
    const auto model = body.value("model", std::string());
    std::string prompt;
    for (const auto& m : body["messages"]) {
      prompt += m.value("content", std::string());
    }
    record({req.path, model, prompt});
    if (!known(model)) {
      res.status = 404;
      res.set_content(
          json{{"error", {{"message", "model '" + model + "' not found"}, {"code", "model_not_found"}}}}.dump(),
          "application/json");
      return;
    }
    const auto* reply = find(prompt);
    if (!reply) {
      res.status = 500;
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(reply->delay_ms));
    const json usage{{"prompt_tokens", 10},
                     {"completion_tokens", reply->completion_tokens},
                     {"total_tokens", 10 + reply->completion_tokens}};
    if (body.value("stream", false)) {
      std::string sse;
      for (const auto& w : words(reply->response_text)) {
        sse += "data: " + json{{"choices", {{{"index", 0}, {"delta", {{"content", w}}}}}}}.dump() + "\n\n";
      }
      if (report_usage_) {
        sse += "data: " + json{{"choices", json::array()}, {"usage", usage}}.dump() + "\n\n";
      }
      sse += "data: [DONE]\n\n";
      res.set_content(sse, "text/event-stream");
      return;
    }
    json out{{"id", "chatcmpl-mock"},
             {"object", "chat.completion"},
             {"model", model},
             {"choices",
              {{{"index", 0},
                {"message", {{"role", "assistant"}, {"content", reply->response_text}}},
                {"finish_reason", "stop"}}}}};
    if (report_usage_) {
      out["usage"] = usage;
    }
    res.set_content(out.dump(), "application/json");
  });

  port_ = s.bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  s.wait_until_ready();
}

MockInferenceServer::~MockInferenceServer() {
  server_->stop();
  if (thread_.joinable()) {
    thread_.join();
  }
}

std::string MockInferenceServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::string MockInferenceServer::openai_url() const { return url() + "/v1"; }

std::vector<RecordedRequest> MockInferenceServer::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

void MockInferenceServer::set_report_usage(bool on) { report_usage_ = on; }

const ScriptedReply* MockInferenceServer::find(const std::string& prompt) const {
  for (const auto& r : options_.replies) {
    if (r.match.empty() || prompt.find(r.match) != std::string::npos) {
      return &r;
    }
  }
  return nullptr;
}

bool MockInferenceServer::known(const std::string& model) const {
  return options_.models.empty() || options_.models.count(model) > 0;
}

void MockInferenceServer::record(RecordedRequest r) {
  std::lock_guard lock(mutex_);
  requests_.push_back(std::move(r));
}

}  // namespace envirollm::testing
