// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace llmke {

struct HttpRequest {
  std::string method = "GET";
  /// Absolute URL without query string, e.g. https://www.wikidata.org/w/api.php
  std::string url;
  std::vector<std::pair<std::string, std::string>> query;
  std::map<std::string, std::string> headers;
  std::string body;
  std::string content_type;
};

struct HttpResponse {
  /// 0 when the request never produced an HTTP status.
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport. A fresh connection per request, so one
/// instance is safe to share between threads.
class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(60),
                            std::string user_agent = "llmke/1.0")
      : timeout_(timeout), user_agent_(std::move(user_agent)) {}

  HttpResponse send(const HttpRequest& request) override;

 private:
  std::chrono::seconds timeout_;
  std::string user_agent_;
};

struct RetryPolicy {
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  int max_attempts = 5;
  /// Server Retry-After hints are honored up to this bound.
  std::chrono::milliseconds max_retry_after{60000};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Spaces requests to the same host at least `min_interval` apart.
class HostRateLimiter {
 public:
  explicit HostRateLimiter(std::chrono::milliseconds min_interval, Sleeper sleep = {});
  void acquire(std::string_view host);

 private:
  std::chrono::milliseconds min_interval_;
  Sleeper sleep_;
  std::mutex mutex_;
  std::map<std::string, std::chrono::steady_clock::time_point, std::less<>> next_slot_;
};

/// Retries transport failures, 429 and 5xx with exponential backoff.
/// Other responses are returned unchanged; exhaustion throws TransportError.
class RetryingTransport : public HttpTransport {
 public:
  RetryingTransport(HttpTransport& inner, RetryPolicy policy = {}, Sleeper sleep = {},
                    HostRateLimiter* limiter = nullptr);

  HttpResponse send(const HttpRequest& request) override;

  /// Delay before retry number `attempt` (1-based), ignoring hints.
  std::chrono::milliseconds backoff(int attempt) const;

 private:
  HttpTransport& inner_;
  RetryPolicy policy_;
  Sleeper sleep_;
  HostRateLimiter* limiter_;
};

/// Retry-After header value: delta-seconds or an HTTP date.
std::optional<std::chrono::milliseconds> parse_retry_after(std::string_view value);

std::string url_encode(std::string_view value);

/// Host part of an absolute URL ("https://a.b/c" -> "a.b").
std::string url_host(std::string_view url);

}  // namespace llmke
