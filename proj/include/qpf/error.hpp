/*
 * Copyright 2026 The qpf Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
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

namespace qpf {

/// Error classes raised by the core library. The C API maps each one to a
/// distinct status code, and the CLI maps those to exit codes.
enum class ErrorCode {
  InvalidArgument,
  File,
  Parse,
  Validation,
  DimensionMismatch,
  NotConverged,
  SingularJacobian,
  InvalidSpin,
  NoCoupling,
  DegenerateCurve,
  UnknownSpin,
  ShapeMismatch,
  MapeUndefined,
  NonFinite,
  VersionMismatch,
  TooFewConverged,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace qpf
