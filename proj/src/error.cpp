// Copyright 2026 The geoham Authors.
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

#include "geoham/error.hpp"

namespace geoham {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::UnterminatedBracket: return "UnterminatedBracket";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnmatchedRingClosure: return "UnmatchedRingClosure";
    case ErrorCode::UnbalancedBranch: return "UnbalancedBranch";
    case ErrorCode::ValenceExceeded: return "ValenceExceeded";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::ZeroNormRow: return "ZeroNormRow";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::UnknownTokenKind: return "UnknownTokenKind";
    case ErrorCode::UnsupportedElement: return "UnsupportedElement";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::OddElectronCount: return "OddElectronCount";
    case ErrorCode::EmbedFailure: return "EmbedFailure";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::EmptyThresholds: return "EmptyThresholds";
  }
  return "Unknown";
}

}  // namespace geoham
