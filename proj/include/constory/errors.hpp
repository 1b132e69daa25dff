#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace constory {

// First n bytes of s, shortened to a UTF-8 character boundary.
inline std::string preview(const std::string& s, std::size_t n = 80) {
  if (s.size() <= n) return s;
  while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
  return s.substr(0, n);
}

// Root of every exception thrown by the library. Callers that only need to
// report a failure can catch this; the subclasses exist for the call sites
// that degrade differently per failure kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSubtype : public Error {
 public:
  explicit UnknownSubtype(const std::string& key)
      : Error("unknown error subtype key: '" + key + "'"), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class AnchorNotFound : public Error {
 public:
  AnchorNotFound(const std::string& quote, double best_score)
      : Error("quote could not be anchored (best score " +
              std::to_string(best_score) + "): '" + preview(quote) + "'"),
        best_score_(best_score) {}
  double best_score() const noexcept { return best_score_; }

 private:
  double best_score_;
};

class ParseFailure : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// Backend errors.
class BackendError : public Error {
 public:
  using Error::Error;
};
class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};
class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};
class ContentRefused : public BackendError {
 public:
  using BackendError::BackendError;
};

// Metric errors.
class ZeroLengthStory : public Error {
 public:
  ZeroLengthStory() : Error("story has zero words") {}
};
class EmptyResultSet : public Error {
 public:
  using Error::Error;
};
class EmptySegment : public Error {
 public:
  EmptySegment() : Error("no token intersects the requested span") {}
};
class InsufficientData : public Error {
 public:
  using Error::Error;
};
class NoRecords : public Error {
 public:
  using Error::Error;
};

class InjectionInfeasible : public Error {
 public:
  using Error::Error;
};

class UnknownFixture : public Error {
 public:
  explicit UnknownFixture(const std::string& name)
      : Error("unknown fixture: '" + name + "'") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace constory
