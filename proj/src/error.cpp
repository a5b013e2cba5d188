#include "its/error.hpp"

namespace its {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::CorpusEmpty: return "CorpusEmpty";
    case ErrorKind::CorpusFileInvalid: return "CorpusFileInvalid";
    case ErrorKind::ManifestMismatch: return "ManifestMismatch";
    case ErrorKind::EmptyCodebook: return "EmptyCodebook";
    case ErrorKind::ProviderExhausted: return "ProviderExhausted";
    case ErrorKind::CredentialMissing: return "CredentialMissing";
    case ErrorKind::FixtureMiss: return "FixtureMiss";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::MissingKey: return "MissingKey";
    case ErrorKind::EmptyThemes: return "EmptyThemes";
    case ErrorKind::MalformedEntry: return "MalformedEntry";
    case ErrorKind::UnrecognizedVerdict: return "UnrecognizedVerdict";
    case ErrorKind::EmptyCodeList: return "EmptyCodeList";
    case ErrorKind::JudgeFailed: return "JudgeFailed";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::InvalidSeries: return "InvalidSeries";
    case ErrorKind::ProviderError: return "ProviderError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MissingVector: return "MissingVector";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::EmptyCurve: return "EmptyCurve";
    case ErrorKind::OutputExists: return "OutputExists";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

}  // namespace its
