#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "its/code.hpp"

namespace its::llm {

inline constexpr std::string_view kDefaultModel = "gpt-3.5-turbo-16k";
inline constexpr std::string_view kDefaultCredentialEnv = "ITS_METER_API_KEY";
inline constexpr std::string_view kDefaultChatEndpoint = "https://api.openai.com/v1/chat/completions";
inline constexpr std::string_view kDedupKey = "value_in_cumulative_u";

struct PromptRequest {
  std::string user_text;
  double temperature = 0.0;
  int max_output_tokens = 2048;
  std::string model_id{kDefaultModel};
  /// Diagnostics raised while building the prompt (not part of the request).
  std::vector<std::string> warnings;
};

struct ProviderConfig {
  std::string endpoint_url{kDefaultChatEndpoint};
  std::string credential_env_var{kDefaultCredentialEnv};
  int max_retries = 3;
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds backoff_base{500};
};

struct RawCompletion {
  std::string text;
  std::chrono::milliseconds provider_latency{0};
  int attempt_count = 1;
};

/// Initial-coding prompt: asks for `n_codes` themes with name, description
/// and quote, returned as JSON under 'Themes'. The interview is fenced with
/// triple backticks, widened if the text itself contains a backtick run.
PromptRequest build_initial_coding_prompt(std::string_view interview_text, int n_codes,
                                          std::string_view model_id = kDefaultModel);

/// Same-meaning judgment of one candidate against the unique codebook.
/// Throws EmptyCodebook when `unique_codebook` is empty.
PromptRequest build_dedup_prompt(std::string_view candidate,
                                 const std::vector<std::string>& unique_codebook,
                                 std::string_view model_id = kDefaultModel);

/// Hex SHA-256 over (model_id, temperature, user_text). Keys replay fixtures.
std::string request_digest(const PromptRequest& request);

/// Implementations must be safe to call from several threads at once.
class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual RawCompletion complete(const PromptRequest& request) = 0;
};

/// OpenAI-compatible chat-completions client with exponential backoff on
/// timeouts, 429 and 5xx. The credential is read from the environment on
/// every call.
class HttpChatProvider final : public CompletionProvider {
 public:
  explicit HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {}
  RawCompletion complete(const PromptRequest& request) override;

 private:
  ProviderConfig config_;
};

/// Serves recorded responses from `<dir>/<digest>.json`.
class ReplayProvider final : public CompletionProvider {
 public:
  explicit ReplayProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}
  RawCompletion complete(const PromptRequest& request) override;

 private:
  std::filesystem::path dir_;
};

/// Forwards to `inner` and writes every response as a fixture record.
class RecordingProvider final : public CompletionProvider {
 public:
  RecordingProvider(std::shared_ptr<CompletionProvider> inner, std::filesystem::path dir);
  RawCompletion complete(const PromptRequest& request) override;

 private:
  std::shared_ptr<CompletionProvider> inner_;
  std::filesystem::path dir_;
};

struct FixtureRecord {
  std::string digest;
  std::string request_summary;
  std::string response_text;
};

void write_fixture(const std::filesystem::path& dir, const PromptRequest& request,
                   std::string_view response_text);
FixtureRecord read_fixture(const std::filesystem::path& file);

/// One-shot call against the live endpoint.
RawCompletion complete(const PromptRequest& request, const ProviderConfig& config);

/// Strips markdown fences and returns the first balanced {...} object.
/// Throws MalformedResponse if none exists.
std::string extract_json_object(std::string_view text);

/// Accepts 1..n_codes_requested+1 entries under 'Themes'.
std::vector<Code> parse_codes_response(const RawCompletion& raw, int n_codes_requested,
                                       std::string_view interview_id = {});

bool parse_dedup_response(const RawCompletion& raw);

/// Inverse of parse_codes_response: {"Themes":[{"name","description","quote"}...]}.
std::string serialize_codes_response(const std::vector<Code>& codes);

struct GatewayOptions {
  std::string model_id{kDefaultModel};
  double temperature = 0.0;
  int max_output_tokens = 2048;
  int parse_retries = 2;
};

/// Prompt building, completion and parsing with parse-failure retries.
class Gateway {
 public:
  Gateway(std::shared_ptr<CompletionProvider> provider, GatewayOptions options = {});

  std::vector<Code> code_interview(std::string_view interview_id, std::string_view text,
                                   int n_codes) const;
  bool judge(std::string_view candidate, const std::vector<std::string>& unique_codebook) const;

  const GatewayOptions& options() const noexcept { return options_; }

 private:
  PromptRequest finish(PromptRequest request) const;

  std::shared_ptr<CompletionProvider> provider_;
  GatewayOptions options_;
};

}  // namespace its::llm
