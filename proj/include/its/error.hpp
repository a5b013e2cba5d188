#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace its {

enum class ErrorKind {
  // corpus
  CorpusEmpty,
  CorpusFileInvalid,
  ManifestMismatch,
  // llm gateway
  EmptyCodebook,
  ProviderExhausted,
  CredentialMissing,
  FixtureMiss,
  MalformedResponse,
  MissingKey,
  EmptyThemes,
  MalformedEntry,
  UnrecognizedVerdict,
  // codebook engine
  EmptyCodeList,
  JudgeFailed,
  // metrics / probability
  DomainError,
  InvalidSeries,
  // similarity
  ProviderError,
  DimensionMismatch,
  MissingVector,
  ZeroNorm,
  InvalidMatrix,
  // reporting
  EmptyCurve,
  OutputExists,
  Io,
  // cli
  Usage,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto an exit code and tests can assert on it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace its
