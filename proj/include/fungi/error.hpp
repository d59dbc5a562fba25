#pragma once

#include <stdexcept>
#include <string>

namespace fungi {

// Base for everything thrown by this library. The CLI maps ConfigError to
// exit code 2 and every other Error to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration, bad parameters, malformed config files, CLI misuse.
struct ConfigError : Error {
  using Error::Error;
};

// Canvas/shape/size mismatches.
struct DimensionError : Error {
  using Error::Error;
};

// Value outside a declared domain (time, temperature).
struct RangeError : Error {
  using Error::Error;
};

// Malformed runtime data: empty positive sets, oversized batches, violated
// call contracts.
struct DataError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Checksum mismatch between manifest and on-disk files.
struct IntegrityError : Error {
  using Error::Error;
};

// Remote caption endpoint failed past the retry budget.
struct ProviderError : Error {
  using Error::Error;
};

// Unparseable provider response; keeps the raw body for diagnosis.
struct ParseError : Error {
  std::string raw_body;
  ParseError(const std::string& message, std::string body)
      : Error(message), raw_body(std::move(body)) {}
};

}  // namespace fungi
