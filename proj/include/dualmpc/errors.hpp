/*
 Copyright 2026 The dualmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace dualmpc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (configuration, CLI, data files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Shape mismatch between arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Base for failures of the numerical routines.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotPositiveSemidefinite : public NumericalError {
 public:
  NotPositiveSemidefinite(const std::string& what, double jitter)
      : NumericalError(what), jitter_(jitter) {}
  double jitter() const noexcept { return jitter_; }

 private:
  double jitter_;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The new point adds no information to the Gram matrix; the caller skips it.
class DegenerateInclusion : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A learner invariant was found broken (e.g. non-positive inverse-Gram diagonal).
class InternalStateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TuningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IllConditionedQ : public NumericalError {
 public:
  IllConditionedQ(const std::string& what, int step)
      : NumericalError(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Simulated state left the finite range.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace dualmpc
