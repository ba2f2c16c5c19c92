// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <json.hpp>

#include <thread>

#include "fakes.hpp"
#include "llmke/common.hpp"
#include "llmke/llm_client.hpp"

namespace llmke {
namespace {

using testing::FunctionProvider;
using testing::QueueTransport;
using testing::TempDir;

ChatRequest request(std::string text) {
  ChatSettings settings;
  return settings.make_request({{Role::user, std::move(text)}}, "question|Q1|BandHasMember");
}

TEST(CacheKey, IgnoresTagAndTokenLimit) {
  ChatRequest a = request("hello");
  ChatRequest b = a;
  b.tag = "other";
  b.max_output_tokens = 7;
  EXPECT_EQ(cache_key(a), cache_key(b));
  EXPECT_EQ(cache_key(a).size(), 64u);
}

TEST(CacheKey, SensitiveToSemanticFields) {
  const ChatRequest base = request("hello");
  ChatRequest other = base;
  other.messages[0].text = "hello ";
  EXPECT_NE(cache_key(base), cache_key(other));
  other = base;
  other.model_name = "gpt-4o";
  EXPECT_NE(cache_key(base), cache_key(other));
  other = base;
  other.temperature = 0.5;
  EXPECT_NE(cache_key(base), cache_key(other));
  other = base;
  other.messages[0].role = Role::system;
  EXPECT_NE(cache_key(base), cache_key(other));
}

TEST(CacheKey, JsonFormIsOrderInsensitive) {
  const ChatRequest base = request("hello");
  const std::string forward =
      R"({"model":"gpt-4","messages":[{"role":"user","content":"hello"}],"temperature":0.0})";
  const std::string shuffled =
      R"({"temperature":0,"messages":[{"content":"hello","role":"user"}],"model":"gpt-4","max_tokens":5})";
  EXPECT_EQ(cache_key_json(forward), cache_key(base));
  EXPECT_EQ(cache_key_json(shuffled), cache_key(base));
}

TEST(Settings, SystemPromptLeads) {
  ChatSettings settings;
  settings.system_prompt = "Be terse.";
  settings.temperature = 0.2;
  const ChatRequest r = settings.make_request({{Role::user, "q"}}, "t");
  ASSERT_EQ(r.messages.size(), 2u);
  EXPECT_EQ(r.messages[0], (Message{Role::system, "Be terse."}));
  EXPECT_DOUBLE_EQ(r.temperature, 0.2);
}

TEST(FixtureStoreTest, SaveLoadSortedAndConflicts) {
  TempDir dir;
  FixtureStore store;
  store.record("bb", "second");
  store.record("aa", "first \"quoted\"\nline");
  store.record("aa", "first \"quoted\"\nline");
  EXPECT_THROW(store.record("aa", "different"), DataError);
  EXPECT_EQ(store.record_or_get("aa", "ignored"), "first \"quoted\"\nline");

  const auto path = dir.path() / "llm.jsonl";
  store.save(path);
  const std::string text = read_file(path);
  EXPECT_LT(text.find("\"aa\""), text.find("\"bb\""));

  const FixtureStore loaded = FixtureStore::load(path);
  EXPECT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded.find("aa"), "first \"quoted\"\nline");
  EXPECT_FALSE(loaded.find("cc").has_value());
  EXPECT_EQ(FixtureStore::load_or_empty(dir.path() / "none.jsonl").size(), 0u);

  write_file(dir.path() / "bad.jsonl", "{\"digest\":\"x\"}\n");
  EXPECT_THROW(FixtureStore::load(dir.path() / "bad.jsonl"), DataError);
}

TEST(Replay, HitAndMiss) {
  FixtureStore store;
  const ChatRequest hit = request("known");
  store.record(cache_key(hit), R"(["x"])");
  ReplayProvider provider(store);
  EXPECT_EQ(provider.complete(hit).text, R"(["x"])");
  try {
    provider.complete(request("unknown"));
    FAIL();
  } catch (const MissingFixtureError& e) {
    EXPECT_EQ(e.key(), cache_key(request("unknown")));
    EXPECT_NE(std::string(e.what()).find("question|Q1|BandHasMember"), std::string::npos);
  }
}

TEST(Client, MemoizesAndRecords) {
  FunctionProvider provider([](const ChatRequest& r) { return "reply to " + r.messages.back().text; });
  FixtureStore disk;
  ChatClient client(provider, {true, 2, &disk});
  const auto first = client.complete(request("a"));
  const auto second = client.complete(request("a"));
  EXPECT_FALSE(first.cached);
  EXPECT_TRUE(second.cached);
  EXPECT_EQ(second.text, "reply to a");
  EXPECT_EQ(provider.calls, 1);
  EXPECT_EQ(disk.find(cache_key(request("a"))), "reply to a");

  // a fresh client over the same store never reaches the provider
  ChatClient warm(provider, {true, 2, &disk});
  EXPECT_TRUE(warm.complete(request("a")).cached);
  EXPECT_EQ(provider.calls, 1);
}

TEST(Client, NoCacheCallsEveryTime) {
  FunctionProvider provider([](const ChatRequest&) { return "r"; });
  ChatClient client(provider, {false, 1, nullptr});
  client.complete(request("a"));
  client.complete(request("a"));
  EXPECT_EQ(provider.calls, 2);
}

TEST(Client, RejectsInvalidRequests) {
  FunctionProvider provider([](const ChatRequest&) { return "r"; });
  ChatClient client(provider);
  ChatRequest empty;
  EXPECT_THROW(client.complete(empty), ConfigError);
  ChatRequest negative = request("a");
  negative.temperature = -1;
  EXPECT_THROW(client.complete(negative), ConfigError);
  EXPECT_EQ(provider.calls, 0);
}

TEST(Client, ConcurrentCallersAgree) {
  FunctionProvider provider([](const ChatRequest& r) { return r.messages.back().text; });
  ChatClient client(provider, {true, 3, nullptr});
  std::vector<std::thread> threads;
  std::vector<std::string> out(16);
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&, i] { out[i] = client.complete(request("k" + std::to_string(i % 4))).text; });
  }
  for (auto& t : threads) t.join();
  for (int i = 0; i < 16; ++i) EXPECT_EQ(out[i], "k" + std::to_string(i % 4));
  EXPECT_LE(provider.calls, 16);
}

TEST(OpenAI, BodyAndResponse) {
  ChatRequest r = request("hi");
  r.max_output_tokens = 64;
  const auto body = nlohmann::json::parse(OpenAIChatProvider::request_body(r));
  EXPECT_EQ(body["model"], "gpt-4");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "hi");
  EXPECT_EQ(body["max_tokens"], 64);
  EXPECT_EQ(body["temperature"], 0.0);

  EXPECT_EQ(OpenAIChatProvider::parse_response_body(R"({"choices":[{"message":{"content":"[\"a\"]"}}]})"),
            R"(["a"])");
  EXPECT_THROW(OpenAIChatProvider::parse_response_body(R"({"choices":[]})"), TransportError);
  EXPECT_THROW(OpenAIChatProvider::parse_response_body("<html>"), TransportError);
}

TEST(OpenAI, SendsAuthorizedPost) {
  QueueTransport transport;
  transport.push(200, R"({"choices":[{"message":{"role":"assistant","content":"ok"}}]})");
  transport.push(401, R"({"error":"bad key"})");
  OpenAIChatProvider provider(transport, "sk-test", "https://api.example.com/");
  EXPECT_EQ(provider.complete(request("hi")).text, "ok");
  ASSERT_EQ(transport.requests.size(), 1u);
  const auto& sent = transport.requests[0];
  EXPECT_EQ(sent.method, "POST");
  EXPECT_EQ(sent.url, "https://api.example.com/v1/chat/completions");
  EXPECT_EQ(sent.headers.at("Authorization"), "Bearer sk-test");
  try {
    provider.complete(request("again"));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 401);
  }
}

TEST(Scripted, AnswersByTag) {
  ScriptedProvider provider(std::map<std::string, std::string>{{"question|Q1|BandHasMember", R"(["Ringo"])"}});
  EXPECT_EQ(provider.complete(request("x")).text, R"(["Ringo"])");
  ChatRequest other = request("x");
  other.tag = "question|Q2|BandHasMember";
  EXPECT_THROW(provider.complete(other), MissingFixtureError);
}

}  // namespace
}  // namespace llmke
