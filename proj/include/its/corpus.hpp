#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace its::corpus {

struct Interview {
  std::string id;
  int ordinal = 0;  // 1-based coding position
  std::string text;
  std::string source_path;
};

/// Ordered, immutable once loaded. Iteration order is ascending ordinal.
struct Corpus {
  std::string name;
  std::vector<Interview> interviews;

  std::size_t size() const noexcept { return interviews.size(); }
  bool empty() const noexcept { return interviews.empty(); }
};

struct OrderSpec {
  /// When set, one relative filename per line; order is significant and
  /// overrides lexicographic filename order.
  std::optional<std::filesystem::path> manifest;
  std::vector<std::string> extensions{".txt"};
};

/// Reads every matching file under `root` (non-recursive).
/// Throws CorpusEmpty, CorpusFileInvalid or ManifestMismatch.
Corpus load_corpus(const std::filesystem::path& root, const OrderSpec& order = {});

/// ceil(characters / chars_per_token). Characters are UTF-8 code points.
std::int64_t estimate_tokens(const Interview& interview, double chars_per_token = 4.0);

struct TokenWarning {
  std::string interview_id;
  std::int64_t estimated_tokens;
  std::int64_t budget;
};

/// Interviews whose estimate exceeds `budget`. Never an error.
std::vector<TokenWarning> check_token_budget(const Corpus& corpus, std::int64_t budget = 16000,
                                             double chars_per_token = 4.0);

}  // namespace its::corpus
