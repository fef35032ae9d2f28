#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcuq {

enum class ErrorKind {
  kParse,           // malformed input file or record
  kValidation,      // record violates a domain invariant
  kDomain,          // argument outside an operation's domain
  kConfig,          // inconsistent experiment / CLI configuration
  kIo,              // filesystem failure
  kCapability,      // backend cannot provide what was asked (e.g. logprobs)
  kTransport,       // network failure after retries, refusal, timeout
  kJudgeParse,      // judge reply did not normalize to yes/no
  kDegenerateData,  // metric undefined on the data (single class, ...)
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define MCUQ_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(Kind, message) {} \
  };

MCUQ_DEFINE_ERROR(ParseError, ErrorKind::kParse)
MCUQ_DEFINE_ERROR(ValidationError, ErrorKind::kValidation)
MCUQ_DEFINE_ERROR(DomainError, ErrorKind::kDomain)
MCUQ_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
MCUQ_DEFINE_ERROR(IoError, ErrorKind::kIo)
MCUQ_DEFINE_ERROR(CapabilityError, ErrorKind::kCapability)
MCUQ_DEFINE_ERROR(TransportError, ErrorKind::kTransport)
MCUQ_DEFINE_ERROR(JudgeParseError, ErrorKind::kJudgeParse)
MCUQ_DEFINE_ERROR(DegenerateDataError, ErrorKind::kDegenerateData)

#undef MCUQ_DEFINE_ERROR

// Throws an error of the same concrete type as `error` with `context`
// prepended to the message.
[[noreturn]] void rethrow_with_context(const Error& error, std::string_view context);

}  // namespace mcuq
