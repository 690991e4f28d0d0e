/*
 * Copyright 2026 The cfs3d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
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

namespace cfs3d {

/// Base of every error thrown by the library. The CLI maps NumericError to
/// exit status 3 and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or matrix shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a precondition (labels out of range, empty sets, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. backward from a non-scalar.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Binary container has a bad magic number or unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Binary container ends early or has inconsistent lengths.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfs3d
