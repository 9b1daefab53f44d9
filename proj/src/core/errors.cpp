#include "core/errors.hpp"

namespace cycleprompt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kComposition: return "CompositionError";
    case ErrorCode::kStrategy: return "StrategyError";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kProvider: return "ProviderError";
    case ErrorCode::kExtraction: return "ExtractionError";
    case ErrorCode::kModality: return "ModalityError";
    case ErrorCode::kFileWrite: return "FileWriteError";
    case ErrorCode::kImageDecode: return "ImageDecodeError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kDecomposition: return "DecompositionError";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kFingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::kPrecondition: return "PreconditionError";
  }
  return "Error";
}

const char* to_string(ProviderErrorKind kind) {
  switch (kind) {
    case ProviderErrorKind::kTransport: return "TRANSPORT";
    case ProviderErrorKind::kRateLimit: return "RATE_LIMIT";
    case ProviderErrorKind::kContentFilter: return "CONTENT_FILTER";
    case ProviderErrorKind::kMalformedResponse: return "MALFORMED_RESPONSE";
    case ProviderErrorKind::kExhaustedRetries: return "EXHAUSTED_RETRIES";
  }
  return "UNKNOWN";
}

}  // namespace cycleprompt
