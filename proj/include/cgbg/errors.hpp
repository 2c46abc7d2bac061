// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cgbg {

// Base class for all workbench errors. Subclasses name the failure mode so
// callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// I/O and file-format failures (CLI exit code 4).
class IOError : public Error {
 public:
  using Error::Error;
};

// Configuration / schema failures (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct BoundaryNotConverged : NumericalError { using NumericalError::NumericalError; };
struct NumericalBlowup : NumericalError { using NumericalError::NumericalError; };
struct DegenerateVariance : NumericalError { using NumericalError::NumericalError; };
struct ShapeMismatch : NumericalError { using NumericalError::NumericalError; };
struct NonFiniteLoss : NumericalError { using NumericalError::NumericalError; };
struct NonFiniteValue : NumericalError { using NumericalError::NumericalError; };
struct NonFiniteInput : NumericalError { using NumericalError::NumericalError; };
struct SolverFailure : NumericalError { using NumericalError::NumericalError; };
struct StepUnderflow : SolverFailure { using SolverFailure::SolverFailure; };
struct MaxStepsExceeded : SolverFailure { using SolverFailure::SolverFailure; };
struct AllClipped : NumericalError { using NumericalError::NumericalError; };
struct EdgeMismatch : NumericalError { using NumericalError::NumericalError; };
struct NoOverlap : NumericalError { using NumericalError::NumericalError; };
struct GridTooNarrow : NumericalError { using NumericalError::NumericalError; };
struct FormatError : IOError { using IOError::IOError; };

}  // namespace cgbg
