// Copyright 2026 The ctxpol Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ctxpol {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query builder was called with arguments it cannot represent.
class BuildError : public Error {
 public:
  using Error::Error;
};

/// A query names a table or column the catalog does not know.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Values of incompatible kinds were compared, or a row does not fit its table.
class KindError : public Error {
 public:
  using Error::Error;
};

/// Primary key collision or duplicate table.
class ConstraintError : public Error {
 public:
  using Error::Error;
};

/// Malformed snapshot input. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Registry mutated after seal, or used before it.
class RegistryError : public Error {
 public:
  using Error::Error;
};

/// A policy body failed; the request is aborted with no partial result.
class PolicyFault : public Error {
 public:
  using Error::Error;
};

/// A post-eval body touched columns outside its selector (debug mode).
class FieldScopeError : public Error {
 public:
  using Error::Error;
};

/// Privileged store access was requested outside a policy body.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctxpol
