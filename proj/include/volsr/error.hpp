// Copyright 2026-present the volsr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace volsr {

/// Base of every error thrown by the library. `category()` and `kind()`
/// feed the CLI's machine-parseable error prefix and exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "data"; }
  virtual const char* kind() const noexcept { return "error"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

class FileNotFoundError : public IoError {
 public:
  using IoError::IoError;
  const char* kind() const noexcept override { return "file_not_found"; }
};

class MalformedHeaderError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "malformed_header"; }
};

class PayloadLengthError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "payload_length"; }
};

/// An invariant of a domain type was violated (NaN voxel, bad spacing, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

/// Imaginary residue after an inverse transform exceeded the symmetry bound.
class SymmetryError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "symmetry"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
  const char* category() const noexcept override { return "usage"; }
};

/// Training produced a non-finite loss.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric"; }
  const char* category() const noexcept override { return "numeric"; }
};

}  // namespace volsr
