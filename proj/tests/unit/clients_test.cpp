#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "envirollm/clients.hpp"
#include "envirollm/errors.hpp"
#include "mock_server.hpp"

namespace envirollm {
namespace {

using testing::MockInferenceServer;
using testing::MockServerOptions;

MockServerOptions scripted() {
  MockServerOptions o;
  o.replies = {{"quantum", "Qubits hold superpositions of states.", 7, 0, 1400},
               {"", "Fallback answer.", 3, 0, std::nullopt}};
  o.models = {"llama3:8b", "phi3:mini", "llama-3-8b"};
  o.quants = {{"llama3:8b", "Q4_0"}, {"llama-3-8b", "Q4_K_M"}};
  return o;
}

TEST(Endpoint, ParsesHttpUrls) {
  const auto e = Endpoint::parse("http://localhost:1234/v1/");
  EXPECT_EQ(e.host, "localhost");
  EXPECT_EQ(e.port, 1234);
  EXPECT_EQ(e.base_path, "/v1");
  EXPECT_EQ(e.origin(), "http://localhost:1234");
  EXPECT_EQ(Endpoint::parse("http://example.org").port, 80);
  EXPECT_EQ(Endpoint::parse("http://example.org").base_path, "");
  EXPECT_THROW(Endpoint::parse("https://example.org"), std::invalid_argument);
  EXPECT_THROW(Endpoint::parse("localhost:11434"), std::invalid_argument);
  EXPECT_THROW(Endpoint::parse("http://host:99999"), std::invalid_argument);
  EXPECT_THROW(Endpoint::parse("http://"), std::invalid_argument);
}

TEST(OllamaClient, GenerateReportsTokensAndEvalDuration) {
  MockInferenceServer server(scripted());
  OllamaClient client(server.url());
  EXPECT_NO_THROW(client.ping());
  const auto c = client.generate("llama3:8b", "Explain quantum computing");
  EXPECT_EQ(c.text, "Qubits hold superpositions of states.");
  EXPECT_EQ(c.tokens, 7);
  ASSERT_TRUE(c.generation_s.has_value());
  EXPECT_DOUBLE_EQ(*c.generation_s, 1.4);
}

TEST(OllamaClient, StreamingConcatenatesChunks) {
  MockInferenceServer server(scripted());
  ClientOptions options;
  options.stream = true;
  OllamaClient client(server.url(), options);
  const auto c = client.generate("llama3:8b", "Explain quantum computing");
  EXPECT_EQ(c.text, "Qubits hold superpositions of states. ");
  EXPECT_EQ(c.tokens, 7);
}

TEST(OllamaClient, MissingUsageLeavesTokensEmpty) {
  auto o = scripted();
  o.report_usage = false;
  MockInferenceServer server(o);
  const auto c = OllamaClient(server.url()).generate("phi3:mini", "hello");
  EXPECT_FALSE(c.tokens.has_value());
  EXPECT_FALSE(c.generation_s.has_value());
}

TEST(OllamaClient, UnknownModel) {
  MockInferenceServer server(scripted());
  EXPECT_THROW(OllamaClient(server.url()).generate("nope:1b", "hello"), ModelNotFound);
}

TEST(OllamaClient, Metadata) {
  MockInferenceServer server(scripted());
  OllamaClient client(server.url());
  EXPECT_EQ(client.model_metadata("llama3:8b"), "Q4_0");
  EXPECT_FALSE(client.model_metadata("phi3:mini").has_value());
  EXPECT_FALSE(client.model_metadata("nope").has_value());
}

TEST(OllamaClient, UnreachableEndpoint) {
  OllamaClient client("http://127.0.0.1:1");
  EXPECT_THROW(client.ping(), EndpointUnreachable);
  EXPECT_THROW(client.generate("m", "p"), EndpointUnreachable);
}

TEST(OllamaClient, SlowServerTimesOut) {
  auto o = scripted();
  o.replies = {{"", "late", 1, 1500, std::nullopt}};
  MockInferenceServer server(o);
  ClientOptions options;
  options.timeout_s = 0.5;
  EXPECT_THROW(OllamaClient(server.url(), options).generate("llama3:8b", "p"), InferenceTimeout);
}

TEST(OllamaClient, MalformedBody) {
  httplib::Server raw;
  raw.Post("/api/generate", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>oops</html>", "text/html");
  });
  const int port = raw.bind_to_any_port("127.0.0.1");
  std::thread t([&] { raw.listen_after_bind(); });
  raw.wait_until_ready();
  EXPECT_THROW(OllamaClient("http://127.0.0.1:" + std::to_string(port)).generate("m", "p"),
               MalformedResponse);
  raw.stop();
  t.join();
}

TEST(OpenAiClient, ChatWithUsage) {
  MockInferenceServer server(scripted());
  OpenAiClient client(server.openai_url());
  EXPECT_NO_THROW(client.ping());
  const auto c = client.chat("llama-3-8b", "Explain quantum computing");
  EXPECT_EQ(c.text, "Qubits hold superpositions of states.");
  EXPECT_EQ(c.tokens, 7);
  EXPECT_FALSE(c.generation_s.has_value());
  const auto requests = server.requests();
  ASSERT_EQ(requests.size(), 1u);
  EXPECT_EQ(requests[0].path, "/v1/chat/completions");
}

TEST(OpenAiClient, BaseUrlWithoutVersionSegment) {
  MockInferenceServer server(scripted());
  OpenAiClient client(server.url());
  EXPECT_EQ(client.chat("llama-3-8b", "hi").text, "Fallback answer.");
  EXPECT_EQ(server.requests().back().path, "/v1/chat/completions");
}

TEST(OpenAiClient, NoUsageField) {
  auto o = scripted();
  o.report_usage = false;
  MockInferenceServer server(o);
  const auto c = OpenAiClient(server.openai_url()).chat("llama-3-8b", "hi");
  EXPECT_EQ(c.text, "Fallback answer.");
  EXPECT_FALSE(c.tokens.has_value());
}

TEST(OpenAiClient, StreamingWithUsageChunk) {
  MockInferenceServer server(scripted());
  ClientOptions options;
  options.stream = true;
  const auto c = OpenAiClient(server.openai_url(), options).chat("llama-3-8b", "quantum");
  EXPECT_EQ(c.text, "Qubits hold superpositions of states. ");
  EXPECT_EQ(c.tokens, 7);
}

TEST(OpenAiClient, UnknownModelAndMetadata) {
  MockInferenceServer server(scripted());
  OpenAiClient client(server.openai_url());
  EXPECT_THROW(client.chat("gpt-9", "hi"), ModelNotFound);
  EXPECT_EQ(client.model_metadata("llama-3-8b"), "Q4_K_M");
  EXPECT_FALSE(client.model_metadata("phi3:mini").has_value());
}

TEST(OpenAiClient, UnreachableEndpoint) {
  EXPECT_THROW(OpenAiClient("http://127.0.0.1:1/v1").ping(), EndpointUnreachable);
}

}  // namespace
}  // namespace envirollm
