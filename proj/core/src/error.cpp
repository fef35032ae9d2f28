#include "mcuq/error.hpp"

#include <string>

namespace mcuq {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kCapability: return "capability error";
    case ErrorKind::kTransport: return "transport error";
    case ErrorKind::kJudgeParse: return "judge reply error";
    case ErrorKind::kDegenerateData: return "degenerate data";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

void rethrow_with_context(const Error& error, std::string_view context) {
  std::string message(context);
  message += ": ";
  message += error.what();
  switch (error.kind()) {
    case ErrorKind::kParse: throw ParseError(message);
    case ErrorKind::kValidation: throw ValidationError(message);
    case ErrorKind::kDomain: throw DomainError(message);
    case ErrorKind::kConfig: throw ConfigError(message);
    case ErrorKind::kIo: throw IoError(message);
    case ErrorKind::kCapability: throw CapabilityError(message);
    case ErrorKind::kTransport: throw TransportError(message);
    case ErrorKind::kJudgeParse: throw JudgeParseError(message);
    case ErrorKind::kDegenerateData: throw DegenerateDataError(message);
  }
  throw Error(error.kind(), message);
}

}  // namespace mcuq
