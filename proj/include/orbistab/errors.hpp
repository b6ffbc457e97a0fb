#pragma once

#include <stdexcept>
#include <string>

namespace orbistab {

/// Base class for all library errors. `kind()` maps onto the CLI exit codes:
/// config errors exit 2, numeric failures exit 3, validation failures exit 4.
class Error : public std::runtime_error {
public:
  enum class Kind { Config, Numeric, Validation };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(Kind::Config, what) {}
};

class NumericError : public Error {
public:
  explicit NumericError(const std::string& what) : Error(Kind::Numeric, what) {}
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(Kind::Validation, what) {}
};

// ---- dynamics ----

/// Mass matrix not usable: non-finite, or condition number above the cap.
class SingularMass : public NumericError {
public:
  using NumericError::NumericError;
};

/// Requested model key is not in the builtin catalog.
class UnknownModel : public ConfigError {
public:
  using ConfigError::ConfigError;
};

// ---- constraint solving ----

/// Root bracket could not be established for the constraint equation.
class NoBracket : public NumericError {
public:
  using NumericError::NumericError;
};

/// Constraint branch jumped between adjacent grid points (lost continuation).
class NonSmooth : public NumericError {
public:
  using NumericError::NumericError;
};

/// State or query left the configured domain (grid span, horizon, ...).
class DomainExceeded : public NumericError {
public:
  using NumericError::NumericError;
};

/// Leading reduced-dynamics coefficient crossed zero along the motion.
class AlphaVanished : public NumericError {
public:
  using NumericError::NumericError;
};

/// No closed orbit: the section return never occurred or did not close.
class NoReturn : public NumericError {
public:
  using NumericError::NumericError;
};

// ---- feedback transform ----

/// The decoupling scalar fell below the regularity floor; the input
/// transform is not invertible at this state.
class RegularityLost : public NumericError {
public:
  using NumericError::NumericError;
};

// ---- transverse chart ----

/// Phase variable failed to advance strictly monotonically along the orbit.
class NotMonotone : public NumericError {
public:
  using NumericError::NumericError;
};

/// Finite-difference step shrank below its floor without passing the
/// consistency check.
class StepUnderflow : public NumericError {
public:
  using NumericError::NumericError;
};

/// Chart inversion requested outside the validity tube.
class OutsideTube : public NumericError {
public:
  using NumericError::NumericError;
};

/// Iterative inversion of the chart map failed to converge.
class NewtonDiverged : public NumericError {
public:
  using NumericError::NumericError;
};

// ---- periodic linear analysis ----

/// Eigenvector basis of the period map is too ill-conditioned to trust.
class DefectivePsi : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Gap between the near-unit multiplier and the contracting pair is below
/// the floor; the normal field iteration has no dominant direction.
class NoDominance : public NumericError {
public:
  using NumericError::NumericError;
};

/// Iteration exhausted its period budget (and restarts) without settling.
class NoConvergence : public NumericError {
public:
  using NumericError::NumericError;
};

/// A zero of the control authority profile has near-zero slope.
class NonSimpleZero : public NumericError {
public:
  using NumericError::NumericError;
};

// ---- switching controller ----

/// Authority integral is (numerically) zero; the gain bound is undefined.
class DegenerateDenominator : public NumericError {
public:
  using NumericError::NumericError;
};

/// Gains fail the closed-loop contraction condition.
class GainsInsufficient : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// ---- simulation ----

/// Mutually incompatible simulation settings.
class ConfigConflict : public ConfigError {
public:
  using ConfigError::ConfigError;
};

/// Trajectory left the chart tube and did not re-enter within the grace
/// window.
class TubeExit : public NumericError {
public:
  using NumericError::NumericError;
};

/// Integrator produced a non-finite state.
class NonfiniteState : public NumericError {
public:
  using NumericError::NumericError;
};

}  // namespace orbistab
