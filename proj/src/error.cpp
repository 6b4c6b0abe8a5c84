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

#include "qpf/error.hpp"

namespace qpf {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::File: return "FileError";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Validation: return "ValidationError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::InvalidSpin: return "InvalidSpin";
    case ErrorCode::NoCoupling: return "NoCoupling";
    case ErrorCode::DegenerateCurve: return "DegenerateCurve";
    case ErrorCode::UnknownSpin: return "UnknownSpin";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MapeUndefined: return "MapeUndefined";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::TooFewConverged: return "TooFewConverged";
  }
  return "Unknown";
}

}  // namespace qpf
