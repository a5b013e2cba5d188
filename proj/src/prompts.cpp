#include <algorithm>

#include <fmt/core.h>

#include "its/digest.hpp"
#include "its/error.hpp"
#include "its/llm.hpp"

namespace its::llm {
namespace {

std::size_t longest_backtick_run(std::string_view text) {
  std::size_t best = 0;
  std::size_t run = 0;
  for (char c : text) {
    run = (c == '`') ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

// A fence that cannot be closed by anything inside `text`.
std::string fence_for(std::string_view text, std::size_t min_width, std::vector<std::string>& warnings,
                      std::string_view what) {
  const auto run = longest_backtick_run(text);
  if (run < min_width) return std::string(min_width, '`');
  warnings.push_back(fmt::format("{} contains a run of {} backticks; delimiter widened to {}", what,
                                 run, run + 1));
  return std::string(run + 1, '`');
}

}  // namespace

PromptRequest build_initial_coding_prompt(std::string_view interview_text, int n_codes,
                                          std::string_view model_id) {
  if (n_codes < 1) fail(ErrorKind::DomainError, "n_codes must be at least 1");
  PromptRequest req;
  req.model_id = std::string(model_id);
  const auto fence = fence_for(interview_text, 3, req.warnings, "interview text");
  req.user_text = fmt::format(
      "\n"
      "Identify the {} most relevant themes in the text, provide a meaningful name for each "
      "theme in no more than 6 words, 12 words simple description of the theme, and a max 30 "
      "words quote from the participant.\n"
      "\n"
      "Format the response as a json file keeping names, descriptions and quotes together in "
      "the json, and keep them together in 'Themes'.\n"
      "\n"
      "{}{}{}\n",
      n_codes, fence, interview_text, fence);
  return req;
}

PromptRequest build_dedup_prompt(std::string_view candidate,
                                 const std::vector<std::string>& unique_codebook,
                                 std::string_view model_id) {
  if (unique_codebook.empty()) {
    fail(ErrorKind::EmptyCodebook, "the unique codebook must be bootstrapped before dedup");
  }
  if (candidate.empty()) fail(ErrorKind::DomainError, "dedup candidate is empty");
  PromptRequest req;
  req.model_id = std::string(model_id);
  const auto fence = fence_for(candidate, 2, req.warnings, "candidate code");

  std::string joined;
  for (std::size_t i = 0; i < unique_codebook.size(); ++i) {
    if (i) joined += ", ";
    joined += unique_codebook[i];
  }
  req.user_text = fmt::format(
      "\n"
      "Then, determine if value: {}{}{} conveys the same idea\n"
      "or meaning to any element in the list cumulative_u:\n"
      "{}.\n"
      "Your response should be either a string 'true' (Same idea or\n"
      "meaning) or a string 'false' (no similarity)\n"
      "\n"
      "Format the response as a json file using the key\n"
      "{}\n",
      fence, candidate, fence, joined, kDedupKey);
  return req;
}

std::string request_digest(const PromptRequest& request) {
  return sha256_hex(
      fmt::format("{}\n{}\n{}", request.model_id, request.temperature, request.user_text));
}

}  // namespace its::llm
