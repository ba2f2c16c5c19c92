// SPDX-License-Identifier: Apache-2.0

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "llmke/http.hpp"

#include <cmath>
#include <ctime>
#include <iomanip>
#include <locale>
#include <sstream>
#include <thread>

#include "llmke/common.hpp"

namespace llmke {
namespace {

void default_sleep(std::chrono::milliseconds delay) { std::this_thread::sleep_for(delay); }

bool retriable(const HttpResponse& response) {
  return response.status == 0 || response.status == 429 || response.status >= 500;
}

std::optional<std::string> header(const HttpResponse& response, std::string_view name) {
  for (const auto& [key, value] : response.headers) {
    if (to_lower(key) == to_lower(name)) return value;
  }
  return std::nullopt;
}

}  // namespace

std::string url_encode(std::string_view value) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (const char c : value) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) != 0 || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(c);
    } else {
      out.push_back('%');
      out.push_back(kHex[u >> 4]);
      out.push_back(kHex[u & 0xf]);
    }
  }
  return out;
}

std::string url_host(std::string_view url) {
  const auto scheme = url.find("://");
  const std::size_t start = scheme == std::string_view::npos ? 0 : scheme + 3;
  const auto end = url.find('/', start);
  return std::string(url.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
}

HttpResponse HttplibTransport::send(const HttpRequest& request) {
  const auto scheme = request.url.find("://");
  if (scheme == std::string::npos) {
    return {0, {}, {}, "not an absolute URL: " + request.url};
  }
  const std::string origin = request.url.substr(0, scheme + 3) + url_host(request.url);
  std::string path = request.url.substr(origin.size());
  if (path.empty()) path = "/";
  if (!request.query.empty()) {
    path += '?';
    for (std::size_t i = 0; i < request.query.size(); ++i) {
      if (i > 0) path += '&';
      path += url_encode(request.query[i].first) + "=" + url_encode(request.query[i].second);
    }
  }

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_follow_location(true);

  httplib::Headers headers{{"User-Agent", user_agent_}};
  for (const auto& [key, value] : request.headers) headers.emplace(key, value);

  httplib::Result result = request.method == "POST"
                               ? client.Post(path, headers, request.body,
                                             request.content_type.empty() ? "application/json" : request.content_type)
                               : client.Get(path, headers);
  HttpResponse response;
  if (!result) {
    response.error = httplib::to_string(result.error());
    return response;
  }
  response.status = result->status;
  response.body = result->body;
  for (const auto& [key, value] : result->headers) response.headers[key] = value;
  return response;
}

HostRateLimiter::HostRateLimiter(std::chrono::milliseconds min_interval, Sleeper sleep)
    : min_interval_(min_interval), sleep_(sleep ? std::move(sleep) : Sleeper(default_sleep)) {}

void HostRateLimiter::acquire(std::string_view host) {
  std::chrono::milliseconds wait{0};
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    auto it = next_slot_.find(host);
    auto slot = it == next_slot_.end() ? now : std::max(now, it->second);
    wait = std::chrono::duration_cast<std::chrono::milliseconds>(slot - now);
    next_slot_[std::string(host)] = slot + min_interval_;
  }
  if (wait.count() > 0) sleep_(wait);
}

RetryingTransport::RetryingTransport(HttpTransport& inner, RetryPolicy policy, Sleeper sleep,
                                     HostRateLimiter* limiter)
    : inner_(inner), policy_(policy), sleep_(sleep ? std::move(sleep) : Sleeper(default_sleep)), limiter_(limiter) {}

std::chrono::milliseconds RetryingTransport::backoff(int attempt) const {
  const double scale = std::pow(policy_.factor, attempt - 1);
  return std::chrono::milliseconds(static_cast<long long>(policy_.base_delay.count() * scale));
}

HttpResponse RetryingTransport::send(const HttpRequest& request) {
  HttpResponse response;
  for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
    if (limiter_ != nullptr) limiter_->acquire(url_host(request.url));
    response = inner_.send(request);
    if (!retriable(response)) return response;
    if (attempt == policy_.max_attempts) break;

    auto delay = backoff(attempt);
    if (const auto hint = header(response, "Retry-After")) {
      if (const auto parsed = parse_retry_after(*hint)) {
        delay = std::max(delay, std::min(*parsed, policy_.max_retry_after));
      }
    }
    sleep_(delay);
  }
  const std::string reason = response.status == 0 ? response.error : "HTTP " + std::to_string(response.status);
  throw TransportError(request.method + " " + request.url + " failed after " +
                           std::to_string(policy_.max_attempts) + " attempts: " + reason,
                       response.status);
}

std::optional<std::chrono::milliseconds> parse_retry_after(std::string_view value) {
  const std::string text = trim(value);
  if (text.empty()) return std::nullopt;
  if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c) != 0 || c == '.'; })) {
    return std::chrono::milliseconds(static_cast<long long>(std::stod(text) * 1000.0));
  }
  std::tm tm{};
  std::istringstream stream(text);
  stream.imbue(std::locale::classic());
  stream >> std::get_time(&tm, "%a, %d %b %Y %H:%M:%S GMT");
  if (stream.fail()) return std::nullopt;
  const std::time_t when = timegm(&tm);
  const std::time_t now = std::time(nullptr);
  if (when <= now) return std::chrono::milliseconds(0);
  return std::chrono::milliseconds(static_cast<long long>(when - now) * 1000);
}

}  // namespace llmke
