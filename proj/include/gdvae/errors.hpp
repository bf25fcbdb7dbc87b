#pragma once

#include <stdexcept>
#include <string>

namespace gdvae {

/// Extents of two tensors (or a tensor and an operation) do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value went NaN/Inf where the computation requires finite numbers.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nearest-point projection failed (non-convergence or singular Hessian).
class ProjectionError : public std::runtime_error {
 public:
  ProjectionError(const std::string& what, double residual, double condition = 0.0)
      : std::runtime_error(what), residual_(residual), condition_(condition) {}

  double residual() const noexcept { return residual_; }
  double condition() const noexcept { return condition_; }

 private:
  double residual_;
  double condition_;
};

/// A PDE integrator blew up or a precondition of a transform was violated.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss; `term()` names the offending component.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::string term)
      : std::runtime_error(what), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

/// Invalid configuration; `field()` is a JSON-pointer-like path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// An artifact (dataset, checkpoint, ROM) required by a stage is absent or corrupt.
class MissingArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gdvae
