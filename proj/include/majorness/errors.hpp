/*
 * Copyright 2026 The Majorness Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace majorness {

// Every failure raised by the library derives from Error so callers can catch
// the whole family at a process boundary (CLI, HTTP handler).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input that parsed but violates a record or payload invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller passed an out-of-range argument (k > N, epsilon = 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Operation not permitted in the object's current state.
class StateError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// The comparison graph splits into several components; the message names them.
class DisconnectedGraphError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A statistic is mathematically undefined for the input (zero variance).
class UndefinedStatisticError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Pipeline stage invoked before the stage that produces its inputs.
class MissingPrerequisiteError : public Error {
 public:
  using Error::Error;
};

// Submission for a task that is unknown, expired or of another kind.
class TaskRejectedError : public Error {
 public:
  using Error::Error;
};

}  // namespace majorness
