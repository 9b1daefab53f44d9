#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace cycleprompt {

namespace core {
struct Transcript;
}

enum class ErrorCode {
  kComposition,
  kStrategy,
  kBudgetExceeded,
  kProvider,
  kExtraction,
  kModality,
  kFileWrite,
  kImageDecode,
  kParse,
  kDecomposition,
  kFormat,
  kConfig,
  kFingerprintMismatch,
  kPrecondition,
};

const char* to_string(ErrorCode code);

// Base for every error the engine raises. A run that fails mid-cycle attaches
// the records completed so far so the caller can inspect or resume them.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  const std::shared_ptr<const core::Transcript>& partial_transcript() const noexcept { return partial_; }
  void attach_partial(std::shared_ptr<const core::Transcript> partial) { partial_ = std::move(partial); }

 private:
  ErrorCode code_;
  std::shared_ptr<const core::Transcript> partial_;
};

#define CYCLEPROMPT_DEFINE_ERROR(Name, Code)                                  \
  class Name : public Error {                                                 \
   public:                                                                    \
    explicit Name(const std::string& message) : Error(ErrorCode::Code, message) {} \
  }

CYCLEPROMPT_DEFINE_ERROR(CompositionError, kComposition);
CYCLEPROMPT_DEFINE_ERROR(StrategyError, kStrategy);
CYCLEPROMPT_DEFINE_ERROR(BudgetExceeded, kBudgetExceeded);
CYCLEPROMPT_DEFINE_ERROR(ExtractionError, kExtraction);
CYCLEPROMPT_DEFINE_ERROR(ModalityError, kModality);
CYCLEPROMPT_DEFINE_ERROR(FileWriteError, kFileWrite);
CYCLEPROMPT_DEFINE_ERROR(ImageDecodeError, kImageDecode);
CYCLEPROMPT_DEFINE_ERROR(ParseError, kParse);
CYCLEPROMPT_DEFINE_ERROR(DecompositionError, kDecomposition);
CYCLEPROMPT_DEFINE_ERROR(FormatError, kFormat);
CYCLEPROMPT_DEFINE_ERROR(ConfigError, kConfig);
CYCLEPROMPT_DEFINE_ERROR(FingerprintMismatch, kFingerprintMismatch);
CYCLEPROMPT_DEFINE_ERROR(PreconditionError, kPrecondition);

#undef CYCLEPROMPT_DEFINE_ERROR

enum class ProviderErrorKind {
  kTransport,
  kRateLimit,
  kContentFilter,
  kMalformedResponse,
  kExhaustedRetries,
};

const char* to_string(ProviderErrorKind kind);

class ProviderError : public Error {
 public:
  ProviderError(ProviderErrorKind kind, const std::string& detail, int attempts = 1)
      : Error(ErrorCode::kProvider, std::string(to_string(kind)) + ": " + detail),
        kind_(kind),
        detail_(detail),
        attempts_(attempts) {}

  ProviderErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  int attempts() const noexcept { return attempts_; }

 private:
  ProviderErrorKind kind_;
  std::string detail_;
  int attempts_;
};

}  // namespace cycleprompt
