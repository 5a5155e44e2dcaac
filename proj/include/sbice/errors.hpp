#pragma once

#include <stdexcept>
#include <string>

namespace sbice {

/// Root of every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or distribution parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Dataset invariant violations and CSV ingestion failures.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failures while generating data or running inference.
class SimulationError : public Error {
 public:
  using Error::Error;
};

enum class ProtocolFailure {
  spawn_failed,
  timeout,
  nonzero_exit,
  malformed_csv,
  row_count_mismatch,
  worker_error,
};

/// Failures on the external worker boundary. Each kind is reported distinctly.
class ProtocolError : public Error {
 public:
  ProtocolError(ProtocolFailure kind, const std::string& what)
      : Error(what), kind_(kind) {}
  ProtocolFailure kind() const noexcept { return kind_; }

 private:
  ProtocolFailure kind_;
};

}  // namespace sbice
