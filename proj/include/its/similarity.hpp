#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace its::similarity {

/// Similarity at or above `threshold - kTolerance` counts as a hit, so a
/// threshold of 1.0 means "numerically identical".
inline constexpr double kTolerance = 1e-6;
inline constexpr double kHardThreshold = 1.0;
inline constexpr double kDefaultWarnThreshold = 0.95;

struct EmbeddingVector {
  std::string code_id;
  std::vector<double> values;
  std::size_t dim() const noexcept { return values.size(); }
};

struct EmbedInput {
  std::string code_id;
  std::string text;  // "name - description"
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<EmbeddingVector> embed(const std::vector<EmbedInput>& inputs) = 0;
};

/// Precomputed vectors: CSV (code_id, v0, v1, ...) or JSON {code_id: [..]}.
/// The format is picked from the extension (.json, otherwise CSV).
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(std::filesystem::path path);
  std::vector<EmbeddingVector> embed(const std::vector<EmbedInput>& inputs) override;

 private:
  std::filesystem::path path_;
};

struct HttpEmbeddingConfig {
  std::string endpoint_url = "https://api.openai.com/v1/embeddings";
  std::string model_id = "all-mpnet-base-v2";
  std::string credential_env_var = "ITS_METER_API_KEY";
  int max_retries = 3;
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds backoff_base{500};
};

/// OpenAI-compatible embeddings endpoint: {model, input: [...]} ->
/// {data: [{index, embedding}]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config) : config_(std::move(config)) {}
  std::vector<EmbeddingVector> embed(const std::vector<EmbedInput>& inputs) override;

 private:
  HttpEmbeddingConfig config_;
};

/// One vector per input, order preserved, uniform dimension, non-zero norm.
std::vector<EmbeddingVector> embed_codes(const std::vector<EmbedInput>& inputs,
                                         EmbeddingProvider& provider);

/// dot / (|a| |b|), clamped to [-1, 1].
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct SimilarityMatrix {
  std::size_t n = 0;
  std::vector<double> entries;  // row-major n*n
  std::vector<std::string> code_ids;

  double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
};

/// Rows are computed in parallel (OpenMP); every entry is produced by the
/// same arithmetic as the serial version.
SimilarityMatrix similarity_matrix(const std::vector<EmbeddingVector>& vectors);
SimilarityMatrix similarity_matrix_serial(const std::vector<EmbeddingVector>& vectors);

/// Throws InvalidMatrix unless symmetric within 1e-9, unit diagonal within
/// 1e-6 and every entry in [-1, 1].
void check_matrix(const SimilarityMatrix& matrix);

struct FlaggedPair {
  std::string code_id_a;
  std::string code_id_b;
  double similarity = 0.0;
};

struct UniquenessReport {
  double threshold = kHardThreshold;
  std::vector<FlaggedPair> flagged_pairs;
  bool passed = true;
};

/// Flags every off-diagonal pair (i < j) at or above the threshold.
UniquenessReport validate_uniqueness(const SimilarityMatrix& matrix,
                                     double threshold = kHardThreshold);

}  // namespace its::similarity
