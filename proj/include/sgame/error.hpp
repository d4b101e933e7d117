#pragma once

#include <stdexcept>
#include <string>

namespace sgame {

/// Broad failure classes; the CLI maps each to a process exit code.
enum class ErrorKind {
  kConfig = 1,
  kData = 2,
  kBackend = 3,
  kIntegrity = 4,
  kNumerical = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class TemplateError : public Error {
 public:
  explicit TemplateError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

/// Malformed or inconsistent input data (corpus, score files, solver input).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class CorpusError : public DataError {
 public:
  using DataError::DataError;
};

class InvalidScoreError : public DataError {
 public:
  using DataError::DataError;
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ErrorKind::kBackend, what) {}
};

/// The endpoint answered but cannot provide what was asked (e.g. no logprobs).
class CapabilityError : public BackendError {
 public:
  using BackendError::BackendError;
};

class ScoringError : public BackendError {
 public:
  ScoringError(std::string item_id, const std::string& what)
      : BackendError("item '" + item_id + "': " + what), item_id_(std::move(item_id)) {}

  const std::string& item_id() const noexcept { return item_id_; }

 private:
  std::string item_id_;
};

class GenerationError : public BackendError {
 public:
  using BackendError::BackendError;
};

class CacheError : public BackendError {
 public:
  using BackendError::BackendError;
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(ErrorKind::kIntegrity, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

/// Raised when the hypotheses needed to build a sensitivity witness do not hold.
class WitnessError : public Error {
 public:
  explicit WitnessError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 1;
    case ErrorKind::kData: return 2;
    case ErrorKind::kBackend: return 3;
    case ErrorKind::kIntegrity: return 4;
    case ErrorKind::kNumerical: return 2;
  }
  return 2;
}

}  // namespace sgame
