// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "llmke/http.hpp"
#include "llmke/prompting.hpp"

namespace llmke {

struct ChatRequest {
  std::string model_name;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_output_tokens = 512;
  /// Trace label ("question|Q1|Relation"). Not part of the request semantics
  /// and never hashed.
  std::string tag;
};

enum class ProviderKind { live, replay };
std::string_view to_string(ProviderKind kind);

struct ChatResponse {
  std::string text;
  ProviderKind provider = ProviderKind::replay;
  bool cached = false;
  double latency_ms = 0.0;
};

/// Model-facing settings shared by every request a run issues.
struct ChatSettings {
  std::string model_name = "gpt-4";
  double temperature = 0.0;
  int max_output_tokens = 512;
  /// Prepended as a system turn when non-empty.
  std::string system_prompt;

  ChatRequest make_request(std::vector<Message> messages, std::string tag) const;
};

/// Digest of (model_name, messages, temperature): SHA-256 over canonical JSON.
std::string cache_key(const ChatRequest& request);

/// Digest of a request given as JSON ({"model", "messages", "temperature"});
/// member order inside objects does not matter.
std::string cache_key_json(std::string_view request_json);

/// digest -> recorded reply. Concurrent readers, serialized writers.
/// Files are JSONL of {"digest", "response_text"}, written sorted by digest.
class FixtureStore {
 public:
  FixtureStore() = default;
  FixtureStore(FixtureStore&& other) noexcept : entries_(std::move(other.entries_)) {}
  static FixtureStore load(const std::filesystem::path& path);
  /// Loads when the file exists, otherwise an empty store.
  static FixtureStore load_or_empty(const std::filesystem::path& path);

  void save(const std::filesystem::path& path) const;
  std::optional<std::string> find(const std::string& digest) const;

  /// Idempotent for identical text; different text for a known digest throws.
  void record(const std::string& digest, const std::string& text);

  /// Inserts when absent; returns whichever text the store holds afterwards.
  std::string record_or_get(const std::string& digest, const std::string& text);

  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::string> entries_;
};

FixtureStore& record_fixture(const ChatRequest& request, const ChatResponse& response, FixtureStore& store);

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual ProviderKind kind() const = 0;
};

/// Serves recorded replies by exact digest; a miss throws MissingFixtureError.
class ReplayProvider : public ChatProvider {
 public:
  explicit ReplayProvider(const FixtureStore& store) : store_(store) {}
  ChatResponse complete(const ChatRequest& request) override;
  ProviderKind kind() const override { return ProviderKind::replay; }

 private:
  const FixtureStore& store_;
};

/// Chat-completions endpoint (POST {base_url}/v1/chat/completions).
class OpenAIChatProvider : public ChatProvider {
 public:
  OpenAIChatProvider(HttpTransport& transport, std::string api_key,
                     std::string base_url = "https://api.openai.com");

  /// Reads the credential from OPENAI_API_KEY; throws ConfigError if unset.
  static std::string api_key_from_env();

  ChatResponse complete(const ChatRequest& request) override;
  ProviderKind kind() const override { return ProviderKind::live; }

  static std::string request_body(const ChatRequest& request);
  /// First choice's message content; throws TransportError on a malformed body.
  static std::string parse_response_body(std::string_view body);

 private:
  HttpTransport& transport_;
  std::string api_key_;
  std::string base_url_;
};

/// Answers by request tag from a hand-written script (JSONL of
/// {"tag", "reply"}). Used to author replay fixtures offline.
class ScriptedProvider : public ChatProvider {
 public:
  explicit ScriptedProvider(std::map<std::string, std::string> replies) : replies_(std::move(replies)) {}
  static ScriptedProvider load(const std::filesystem::path& path);
  ChatResponse complete(const ChatRequest& request) override;
  ProviderKind kind() const override { return ProviderKind::live; }

 private:
  std::map<std::string, std::string> replies_;
};

struct ChatClientOptions {
  bool cache = true;
  std::size_t max_in_flight = 4;
  /// On-disk cache in fixture format: consulted before the provider and
  /// receives every upstream reply.
  FixtureStore* persistent = nullptr;
};

/// Uniform completion entry point: in-memory cache, optional recording,
/// bounded in-flight requests.
class ChatClient {
 public:
  ChatClient(ChatProvider& provider, ChatClientOptions options = {});

  ChatResponse complete(const ChatRequest& request);

 private:
  ChatProvider& provider_;
  ChatClientOptions options_;
  std::counting_semaphore<1024> in_flight_;
  FixtureStore memo_;
};

}  // namespace llmke
