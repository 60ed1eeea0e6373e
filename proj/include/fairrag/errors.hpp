#pragma once

#include <stdexcept>
#include <string>

namespace fairrag {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: schema violations, broken invariants, missing fields.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Agent or judge output that does not follow its expected grammar.
/// Keeps the raw text so traces can show what the model actually said.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Chat backend failure after retries, or a scripted rule miss.
class GatewayError : public Error {
 public:
  GatewayError(const std::string& what, bool retryable = false)
      : Error(what), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

class EmbeddingError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairrag
