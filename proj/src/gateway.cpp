#include "its/error.hpp"
#include "its/llm.hpp"

namespace its::llm {
namespace {

bool is_parse_failure(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedResponse:
    case ErrorKind::MissingKey:
    case ErrorKind::EmptyThemes:
    case ErrorKind::MalformedEntry:
    case ErrorKind::UnrecognizedVerdict:
      return true;
    default:
      return false;
  }
}

template <typename Parse>
auto complete_and_parse(CompletionProvider& provider, const PromptRequest& request, int retries,
                        Parse&& parse) {
  for (int attempt = 0;; ++attempt) {
    const auto raw = provider.complete(request);
    try {
      return parse(raw);
    } catch (const Error& e) {
      if (!is_parse_failure(e.kind()) || attempt >= retries) throw;
    }
  }
}

}  // namespace

Gateway::Gateway(std::shared_ptr<CompletionProvider> provider, GatewayOptions options)
    : provider_(std::move(provider)), options_(std::move(options)) {
  if (!provider_) fail(ErrorKind::Usage, "gateway needs a provider");
  if (options_.parse_retries < 0) fail(ErrorKind::Usage, "parse_retries must be >= 0");
}

PromptRequest Gateway::finish(PromptRequest request) const {
  request.temperature = options_.temperature;
  request.max_output_tokens = options_.max_output_tokens;
  return request;
}

std::vector<Code> Gateway::code_interview(std::string_view interview_id, std::string_view text,
                                          int n_codes) const {
  const auto request =
      finish(build_initial_coding_prompt(text, n_codes, options_.model_id));
  return complete_and_parse(*provider_, request, options_.parse_retries,
                            [&](const RawCompletion& raw) {
                              return parse_codes_response(raw, n_codes, interview_id);
                            });
}

bool Gateway::judge(std::string_view candidate,
                    const std::vector<std::string>& unique_codebook) const {
  const auto request =
      finish(build_dedup_prompt(candidate, unique_codebook, options_.model_id));
  return complete_and_parse(*provider_, request, options_.parse_retries,
                            [](const RawCompletion& raw) { return parse_dedup_response(raw); });
}

}  // namespace its::llm
