#include "http_client.hpp"

#include <cstdlib>
#include <thread>

#include <fmt/core.h>
#include <httplib.h>

namespace its::detail {
namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorKind::Usage, "endpoint URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string read_credential(const std::string& env_var) {
  const char* value = std::getenv(env_var.c_str());
  if (value == nullptr || *value == '\0') {
    fail(ErrorKind::CredentialMissing, "environment variable " + env_var + " is not set");
  }
  return value;
}

HttpReply post_json(const std::string& url, const std::string& bearer_token,
                    const std::string& body, const RetryPolicy& policy,
                    ErrorKind exhausted_kind) {
  const auto [base, path] = split_url(url);
  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  std::string last_problem;
  const int max_attempts = policy.max_retries + 1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(policy.backoff_base * (1LL << (attempt - 2)));
    }
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, headers, body, "application/json");
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    if (!res) {
      last_problem = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return {res->body, attempt, latency};
    last_problem = fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200));
    if (!retryable(res->status)) fail(ErrorKind::ProviderError, url + " " + last_problem);
  }
  fail(exhausted_kind, fmt::format("{} failed after {} attempts; last: {}", url, max_attempts,
                                   last_problem));
}

}  // namespace its::detail
