// Copyright 2026 The OSCARS Authors.
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

#ifndef OSCARS_ERRORS_H_
#define OSCARS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace oscars {

// Exit codes used by the command-line tool. Each error class maps to one.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitValidation = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return kExitFailure; }
};

// Malformed input or a violated precondition on user-supplied parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitValidation; }
};

// Well-formed input that cannot support the requested operation
// (missing classes, unresolvable ids, checksum mismatch, ...).
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitData; }
};

// Non-finite values or degenerate geometry during computation.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitNumeric; }
};

}  // namespace oscars

#endif  // OSCARS_ERRORS_H_
