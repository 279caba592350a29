#include "peerrisk/http.hpp"

#include "peerrisk/error.hpp"

#include <httplib.h>

#include <thread>

namespace peerrisk::http {

namespace {

struct SplitUrl {
  std::string scheme_host_port;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::ConfigError, "malformed URL '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

Response HttplibTransport::post(const std::string& url, const std::map<std::string, std::string>& headers,
                                const std::string& body) {
  const auto [base, path] = split_url(url);
  httplib::Client client(base);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);
  auto result = client.Post(path, hdrs, body, "application/json");
  if (!result) return Response{0, {}, httplib::to_string(result.error())};
  return Response{result->status, result->body, {}};
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  if (backoff.empty()) return std::chrono::milliseconds(0);
  const auto idx = static_cast<std::size_t>(std::max(attempt, 1) - 1);
  return backoff[std::min(idx, backoff.size() - 1)];
}

Response post_with_retry(Transport& transport, const std::string& url,
                         const std::map<std::string, std::string>& headers, const std::string& body,
                         const RetryPolicy& policy) {
  Response last;
  const int attempts = std::max(policy.max_attempts, 1);
  int made = 0;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    ++made;
    last = transport.post(url, headers, body);
    if (last.status >= 200 && last.status < 300) return last;
    if (!RetryPolicy::retryable(last.status) || attempt == attempts) break;
    const auto delay = policy.delay_after(attempt);
    if (policy.sleep) {
      policy.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
  std::string detail = last.status == 0 ? "transport error: " + last.transport_error
                                        : "HTTP " + std::to_string(last.status) + ": " + last.body.substr(0, 300);
  Error err(ErrorKind::ProviderError, "POST " + url + " failed after " + std::to_string(made) + " attempt(s); " + detail);
  err.with_status(last.status);
  throw err;
}

std::map<std::string, std::string> bearer_headers(const std::string& api_key) {
  std::map<std::string, std::string> h;
  if (!api_key.empty()) h["Authorization"] = "Bearer " + api_key;
  return h;
}

}  // namespace peerrisk::http
