#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace supalign {

/// Process exit codes used by the CLI.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kDivergence = 3,
  kDegenerate = 4,
  kIo = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kDegenerate; }
};

/// Mismatched matrix/vector shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Inputs that make an operation undefined (too few rows, constant data, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

class TrainingDivergenceError : public Error {
 public:
  TrainingDivergenceError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }
  ExitCode exit_code() const noexcept override { return ExitCode::kDivergence; }

 private:
  std::size_t step_;
};

/// Sparse recovery found no exact fit, or more than one distinct exact fit.
class RecoveryFailureError : public Error {
 public:
  using Error::Error;
};

/// Solver failed to terminate; message carries iteration diagnostics.
class SolverError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kIo; }
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kIo; }
};

/// A failure inside a pipeline stage; keeps the exit code of the cause.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what, ExitCode code)
      : Error("[" + stage + "] " + what), stage_(stage), code_(code) {}
  const std::string& stage() const noexcept { return stage_; }
  ExitCode exit_code() const noexcept override { return code_; }

 private:
  std::string stage_;
  ExitCode code_;
};

}  // namespace supalign
