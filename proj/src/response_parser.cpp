#include <algorithm>
#include <cctype>
#include <optional>

#include <fmt/core.h>
#include <json.hpp>

#include "its/error.hpp"
#include "its/llm.hpp"

namespace its::llm {
namespace {

using ojson = nlohmann::ordered_json;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Content of the first ``` fenced block, or the input unchanged.
std::string_view strip_fences(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos || open > text.find('{')) return text;
  auto body_start = text.find('\n', open);
  if (body_start == std::string_view::npos) return text;
  ++body_start;
  const auto close = text.find("```", body_start);
  if (close == std::string_view::npos) return text.substr(body_start);
  return text.substr(body_start, close - body_start);
}

std::optional<std::string_view> first_balanced_object(std::string_view text) {
  for (auto start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) return text.substr(start, i - start + 1);
    }
    // Unbalanced from here on; no later start can close either.
    return std::nullopt;
  }
  return std::nullopt;
}

ojson parse_object(std::string_view text) {
  auto doc = ojson::parse(extract_json_object(text), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    fail(ErrorKind::MalformedResponse, "extracted object is not valid JSON");
  }
  return doc;
}

const ojson* find_key(const ojson& obj, std::string_view key) {
  if (auto it = obj.find(std::string(key)); it != obj.end()) return &*it;
  const auto wanted = lower(key);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (lower(it.key()) == wanted) return &it.value();
  }
  return nullptr;
}

std::string string_field(const ojson& entry, std::initializer_list<std::string_view> keys) {
  for (auto key : keys) {
    if (const auto* v = find_key(entry, key); v != nullptr && v->is_string()) {
      return trim(v->get<std::string>());
    }
  }
  return {};
}

}  // namespace

std::string extract_json_object(std::string_view text) {
  if (auto obj = first_balanced_object(strip_fences(text))) return std::string(*obj);
  if (auto obj = first_balanced_object(text)) return std::string(*obj);
  fail(ErrorKind::MalformedResponse, "no balanced JSON object in response");
}

std::vector<Code> parse_codes_response(const RawCompletion& raw, int n_codes_requested,
                                       std::string_view interview_id) {
  const auto doc = parse_object(raw.text);
  const auto* themes = find_key(doc, "Themes");
  if (themes == nullptr) fail(ErrorKind::MissingKey, "Themes");

  std::vector<const ojson*> entries;
  if (themes->is_array()) {
    for (const auto& e : *themes) entries.push_back(&e);
  } else if (themes->is_object()) {
    for (const auto& [k, e] : themes->items()) entries.push_back(&e);
  } else {
    fail(ErrorKind::MalformedResponse, "'Themes' is neither an array nor an object");
  }
  if (entries.empty()) fail(ErrorKind::EmptyThemes, "'Themes' holds no entries");
  if (static_cast<int>(entries.size()) > n_codes_requested + 1) {
    fail(ErrorKind::MalformedResponse,
         fmt::format("{} themes returned, at most {} accepted", entries.size(),
                     n_codes_requested + 1));
  }

  std::vector<Code> codes;
  codes.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = *entries[i];
    if (!e.is_object()) fail(ErrorKind::MalformedEntry, fmt::format("index {}", i));
    Code code;
    code.name = string_field(e, {"name", "theme", "theme_name", "title", "code"});
    if (code.name.empty()) fail(ErrorKind::MalformedEntry, fmt::format("index {}: no name", i));
    code.description = string_field(e, {"description", "desc"});
    code.quote = string_field(e, {"quote", "quotes"});
    code.interview_id = std::string(interview_id);
    code.index_in_interview = static_cast<int>(i);
    codes.push_back(std::move(code));
  }
  return codes;
}

bool parse_dedup_response(const RawCompletion& raw) {
  const auto doc = parse_object(raw.text);
  const auto* value = find_key(doc, kDedupKey);
  if (value == nullptr) fail(ErrorKind::MissingKey, std::string(kDedupKey));
  if (value->is_boolean()) return value->get<bool>();
  if (value->is_string()) {
    const auto verdict = lower(trim(value->get<std::string>()));
    if (verdict == "true") return true;
    if (verdict == "false") return false;
  }
  fail(ErrorKind::UnrecognizedVerdict, value->dump());
}

std::string serialize_codes_response(const std::vector<Code>& codes) {
  ojson themes = ojson::array();
  for (const auto& c : codes) {
    themes.push_back({{"name", c.name}, {"description", c.description}, {"quote", c.quote}});
  }
  return ojson{{"Themes", std::move(themes)}}.dump(2);
}

}  // namespace its::llm
