#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <json.hpp>

#include "http_client.hpp"
#include "its/error.hpp"
#include "its/llm.hpp"

namespace its::llm {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string summarize(const PromptRequest& request) {
  std::string head;
  bool space = false;
  for (char c : request.user_text) {
    if (head.size() >= 120) break;
    const bool ws = c == '\n' || c == '\t' || c == ' ' || c == '\r';
    if (ws) {
      space = !head.empty();
      continue;
    }
    if (space) head += ' ';
    space = false;
    head += c;
  }
  return fmt::format("model={} temperature={} chars={} | {}", request.model_id,
                     request.temperature, request.user_text.size(), head);
}

}  // namespace

RawCompletion HttpChatProvider::complete(const PromptRequest& request) {
  const auto key = detail::read_credential(config_.credential_env_var);
  const json body = {
      {"model", request.model_id},
      {"messages", json::array({{{"role", "user"}, {"content", request.user_text}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output_tokens},
  };
  const detail::RetryPolicy policy{config_.max_retries, config_.timeout, config_.backoff_base};
  const auto reply =
      detail::post_json(config_.endpoint_url, key, body.dump(), policy, ErrorKind::ProviderExhausted);

  const auto doc = json::parse(reply.body, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::ProviderError, "chat endpoint returned non-JSON body");
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    return RawCompletion{content.get<std::string>(), reply.latency, reply.attempts};
  } catch (const json::exception& e) {
    fail(ErrorKind::ProviderError, std::string("unexpected chat response shape: ") + e.what());
  }
}

RawCompletion complete(const PromptRequest& request, const ProviderConfig& config) {
  return HttpChatProvider(config).complete(request);
}

void write_fixture(const fs::path& dir, const PromptRequest& request,
                   std::string_view response_text) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const auto digest = request_digest(request);
  const json record = {
      {"digest", digest},
      {"request_summary", summarize(request)},
      {"response_text", std::string(response_text)},
  };
  const auto final_path = dir / (digest + ".json");
  auto tmp = final_path;
  tmp += fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, tmp.string() + ": cannot write fixture");
    out << record.dump(2) << '\n';
    if (!out) fail(ErrorKind::Io, tmp.string() + ": write failed");
  }
  fs::rename(tmp, final_path, ec);
  if (ec) fail(ErrorKind::Io, final_path.string() + ": " + ec.message());
}

FixtureRecord read_fixture(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::Io, file.string() + ": cannot open fixture");
  const auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorKind::Io, file.string() + ": not JSON");
  try {
    return FixtureRecord{doc.at("digest").get<std::string>(),
                         doc.value("request_summary", std::string{}),
                         doc.at("response_text").get<std::string>()};
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, file.string() + ": " + e.what());
  }
}

RawCompletion ReplayProvider::complete(const PromptRequest& request) {
  const auto digest = request_digest(request);
  const auto path = dir_ / (digest + ".json");
  if (!fs::is_regular_file(path)) {
    fail(ErrorKind::FixtureMiss, fmt::format("no recorded response for digest {} in {}", digest,
                                             dir_.string()));
  }
  auto record = read_fixture(path);
  if (record.digest != digest) {
    fail(ErrorKind::FixtureMiss, path.string() + ": digest field does not match file name");
  }
  return RawCompletion{std::move(record.response_text), std::chrono::milliseconds{0}, 1};
}

RecordingProvider::RecordingProvider(std::shared_ptr<CompletionProvider> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  if (!inner_) fail(ErrorKind::Usage, "recording provider needs an inner provider");
}

RawCompletion RecordingProvider::complete(const PromptRequest& request) {
  auto raw = inner_->complete(request);
  write_fixture(dir_, request, raw.text);
  return raw;
}

}  // namespace its::llm
