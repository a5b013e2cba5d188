#pragma once

#include <chrono>
#include <string>

#include "its/error.hpp"

namespace its::detail {

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds backoff_base{500};
};

struct HttpReply {
  std::string body;
  int attempts = 0;
  std::chrono::milliseconds latency{0};
};

/// POSTs a JSON body to `url` with a bearer token. Retries connection
/// failures, timeouts, 429 and 5xx with exponential backoff
/// (base, 2*base, 4*base ...). Other non-2xx statuses fail immediately with
/// ProviderError; exhausting the retries throws `exhausted_kind`.
HttpReply post_json(const std::string& url, const std::string& bearer_token,
                    const std::string& body, const RetryPolicy& policy,
                    ErrorKind exhausted_kind);

/// Reads the credential; throws CredentialMissing when unset or empty.
std::string read_credential(const std::string& env_var);

}  // namespace its::detail
