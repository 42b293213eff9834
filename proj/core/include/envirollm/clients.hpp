#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace envirollm {

/// Split form of an http:// base URL.
struct Endpoint {
  std::string host;
  int port = 80;
  std::string base_path;  // no trailing slash, may be empty

  /// Throws std::invalid_argument for anything but http://host[:port][/path].
  static Endpoint parse(std::string_view url);

  std::string origin() const;
  std::string url() const;
};

/// What one completion request produced. Token count and generation time
/// are the platform's own statistics when it reports them.
struct Completion {
  std::string text;
  std::optional<std::int64_t> tokens;
  std::optional<double> generation_s;
};

struct ClientOptions {
  double timeout_s = 300.0;
  double connect_timeout_s = 5.0;
  bool stream = false;
  std::optional<double> temperature;
};

/// Ollama REST adapter: /api/generate for inference, /api/show for model
/// metadata, /api/tags as a liveness probe.
class OllamaClient {
 public:
  explicit OllamaClient(std::string base_url, ClientOptions options = {});

  const std::string& base_url() const noexcept { return base_url_; }

  /// Throws EndpointUnreachable.
  void ping() const;

  /// Throws EndpointUnreachable, ModelNotFound, InferenceTimeout,
  /// MalformedResponse.
  Completion generate(std::string_view model, std::string_view prompt) const;

  /// Quantization-related metadata from /api/show, or nullopt.
  std::optional<std::string> model_metadata(std::string_view model) const;

 private:
  std::string base_url_;
  Endpoint endpoint_;
  ClientOptions options_;
};

/// OpenAI chat-completions adapter for LM Studio, vLLM and similar servers.
/// The base URL may include the /v1 suffix or not.
class OpenAiClient {
 public:
  explicit OpenAiClient(std::string base_url, ClientOptions options = {},
                        std::string api_key = {});

  const std::string& base_url() const noexcept { return base_url_; }

  /// GET {api}/models. Throws EndpointUnreachable.
  void ping() const;

  /// Throws EndpointUnreachable, ModelNotFound, InferenceTimeout,
  /// MalformedResponse (body with neither content nor usage).
  Completion chat(std::string_view model, std::string_view prompt) const;

  /// Best-effort LM Studio metadata lookup (GET /api/v0/models/{model});
  /// nullopt when the server does not offer it.
  std::optional<std::string> model_metadata(std::string_view model) const;

 private:
  std::string api_path(std::string_view suffix) const;

  std::string base_url_;
  Endpoint endpoint_;
  ClientOptions options_;
  std::string api_key_;
};

}  // namespace envirollm
