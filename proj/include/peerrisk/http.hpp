#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace peerrisk::http {

struct Response {
  int status = 0;  // 0 means the request never produced an HTTP response
  std::string body;
  std::string transport_error;
};

/// Minimal POST-only transport so providers can be exercised without a network.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Response post(const std::string& url, const std::map<std::string, std::string>& headers,
                        const std::string& body) = 0;
};

/// cpp-httplib backed transport; https URLs go through OpenSSL.
class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(120)) : timeout_(timeout) {}
  Response post(const std::string& url, const std::map<std::string, std::string>& headers,
                const std::string& body) override;

 private:
  std::chrono::seconds timeout_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::vector<std::chrono::milliseconds> backoff = {std::chrono::seconds(1), std::chrono::seconds(2),
                                                    std::chrono::seconds(4)};
  /// Replaced in tests so retry loops do not actually sleep.
  std::function<void(std::chrono::milliseconds)> sleep;

  static bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }
  std::chrono::milliseconds delay_after(int attempt) const;  // attempt is 1-based
};

/// POSTs `body` until a non-retryable status arrives or attempts run out.
/// Throws ProviderError (carrying the last HTTP status) unless the final status is 2xx.
Response post_with_retry(Transport& transport, const std::string& url,
                         const std::map<std::string, std::string>& headers, const std::string& body,
                         const RetryPolicy& policy);

std::map<std::string, std::string> bearer_headers(const std::string& api_key);

}  // namespace peerrisk::http
