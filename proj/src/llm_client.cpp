// SPDX-License-Identifier: Apache-2.0

#include "llmke/llm_client.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <mutex>

#include "llmke/common.hpp"

namespace llmke {
namespace {

using json = nlohmann::json;

/// nlohmann::json objects keep keys sorted, so dump() is canonical.
std::string canonical_digest(const json& model, const json& messages, const json& temperature) {
  json canonical;
  canonical["model"] = model;
  canonical["messages"] = json::array();
  for (const auto& message : messages) {
    canonical["messages"].push_back({{"role", message.at("role")}, {"content", message.at("content")}});
  }
  canonical["temperature"] = temperature.get<double>();
  return sha256_hex(canonical.dump(-1, ' ', false, json::error_handler_t::replace));
}

json messages_json(const std::vector<Message>& messages) {
  json out = json::array();
  for (const auto& message : messages) {
    out.push_back({{"role", to_string(message.role)}, {"content", message.text}});
  }
  return out;
}

class Semaphore {
 public:
  explicit Semaphore(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~Semaphore() { s_.release(); }
  Semaphore(const Semaphore&) = delete;
  Semaphore& operator=(const Semaphore&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

std::string_view to_string(ProviderKind kind) { return kind == ProviderKind::live ? "live" : "replay"; }

ChatRequest ChatSettings::make_request(std::vector<Message> messages, std::string tag) const {
  ChatRequest request;
  request.model_name = model_name;
  if (!system_prompt.empty()) request.messages.push_back({Role::system, system_prompt});
  for (auto& message : messages) request.messages.push_back(std::move(message));
  request.temperature = temperature;
  request.max_output_tokens = max_output_tokens;
  request.tag = std::move(tag);
  return request;
}

std::string cache_key(const ChatRequest& request) {
  return canonical_digest(request.model_name, messages_json(request.messages), request.temperature);
}

std::string cache_key_json(std::string_view request_json) {
  const json request = json::parse(request_json);
  return canonical_digest(request.at("model"), request.at("messages"), request.value("temperature", json(0.0)));
}

FixtureStore FixtureStore::load(const std::filesystem::path& path) {
  FixtureStore store;
  for (const auto& line : read_jsonl_lines(path)) {
    const std::string where = path.string() + ":" + std::to_string(line.number);
    json entry;
    try {
      entry = json::parse(line.text);
      store.record(entry.at("digest").get<std::string>(), entry.at("response_text").get<std::string>());
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return store;
}

FixtureStore FixtureStore::load_or_empty(const std::filesystem::path& path) {
  return std::filesystem::exists(path) ? load(path) : FixtureStore{};
}

void FixtureStore::save(const std::filesystem::path& path) const {
  std::string out;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [digest, text] : entries_) {
      nlohmann::ordered_json line;
      line["digest"] = digest;
      line["response_text"] = text;
      out += line.dump(-1, ' ', false, json::error_handler_t::replace);
      out += '\n';
    }
  }
  write_file(path, out);
}

std::optional<std::string> FixtureStore::find(const std::string& digest) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FixtureStore::record(const std::string& digest, const std::string& text) {
  std::unique_lock lock(mutex_);
  const auto [it, inserted] = entries_.emplace(digest, text);
  if (!inserted && it->second != text) {
    throw DataError("fixture " + digest + " already recorded with different text");
  }
}

std::string FixtureStore::record_or_get(const std::string& digest, const std::string& text) {
  std::unique_lock lock(mutex_);
  return entries_.emplace(digest, text).first->second;
}

std::size_t FixtureStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

FixtureStore& record_fixture(const ChatRequest& request, const ChatResponse& response, FixtureStore& store) {
  store.record(cache_key(request), response.text);
  return store;
}

ChatResponse ReplayProvider::complete(const ChatRequest& request) {
  const std::string digest = cache_key(request);
  auto text = store_.find(digest);
  if (!text) {
    throw MissingFixtureError("no recorded reply for request " + digest +
                                  (request.tag.empty() ? "" : " (" + request.tag + ")"),
                              digest);
  }
  return {std::move(*text), ProviderKind::replay, false, 0.0};
}

OpenAIChatProvider::OpenAIChatProvider(HttpTransport& transport, std::string api_key, std::string base_url)
    : transport_(transport), api_key_(std::move(api_key)), base_url_(std::move(base_url)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::string OpenAIChatProvider::api_key_from_env() {
  const char* key = std::getenv("OPENAI_API_KEY");
  if (key == nullptr || *key == '\0') {
    throw ConfigError("live provider needs OPENAI_API_KEY in the environment");
  }
  return key;
}

std::string OpenAIChatProvider::request_body(const ChatRequest& request) {
  json body;
  body["model"] = request.model_name;
  body["messages"] = messages_json(request.messages);
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string OpenAIChatProvider::parse_response_body(std::string_view body) {
  try {
    const json parsed = json::parse(body);
    const json& content = parsed.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat completion body: ") + e.what());
  }
}

ChatResponse OpenAIChatProvider::complete(const ChatRequest& request) {
  HttpRequest http;
  http.method = "POST";
  http.url = base_url_ + "/v1/chat/completions";
  http.headers["Authorization"] = "Bearer " + api_key_;
  http.content_type = "application/json";
  http.body = request_body(request);

  const auto start = std::chrono::steady_clock::now();
  const HttpResponse response = transport_.send(http);
  const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
  if (response.status != 200) {
    throw TransportError("chat completion returned HTTP " + std::to_string(response.status) + ": " +
                             response.body.substr(0, 300),
                         response.status);
  }
  return {parse_response_body(response.body), ProviderKind::live, false, elapsed.count()};
}

ScriptedProvider ScriptedProvider::load(const std::filesystem::path& path) {
  std::map<std::string, std::string> replies;
  for (const auto& line : read_jsonl_lines(path)) {
    try {
      const json entry = json::parse(line.text);
      replies[entry.at("tag").get<std::string>()] = entry.at("reply").get<std::string>();
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return ScriptedProvider(std::move(replies));
}

ChatResponse ScriptedProvider::complete(const ChatRequest& request) {
  const auto it = replies_.find(request.tag);
  if (it == replies_.end()) {
    throw MissingFixtureError("no scripted reply for tag \"" + request.tag + "\"", request.tag);
  }
  return {it->second, ProviderKind::live, false, 0.0};
}

ChatClient::ChatClient(ChatProvider& provider, ChatClientOptions options)
    : provider_(provider),
      options_(options),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options.max_in_flight, 1, 1024))) {}

ChatResponse ChatClient::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw ConfigError("chat request without messages");
  if (request.temperature < 0.0) throw ConfigError("chat request with negative temperature");

  const std::string digest = cache_key(request);
  if (options_.cache) {
    if (auto text = memo_.find(digest)) {
      return {std::move(*text), provider_.kind(), true, 0.0};
    }
  }
  if (options_.persistent != nullptr) {
    if (auto text = options_.persistent->find(digest)) {
      if (options_.cache) memo_.record_or_get(digest, *text);
      return {std::move(*text), provider_.kind(), true, 0.0};
    }
  }

  ChatResponse response;
  {
    Semaphore slot(in_flight_);
    response = provider_.complete(request);
  }
  if (options_.cache) response.text = memo_.record_or_get(digest, response.text);
  if (options_.persistent != nullptr) response.text = options_.persistent->record_or_get(digest, response.text);
  return response;
}

}  // namespace llmke
