// Copyright 2026 The pixrf Authors
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

#include "pixrf/error.hpp"

namespace pixrf {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedGraph: return "MalformedGraph";
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::UnknownOp: return "UnknownOp";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::EmptyAfterClip: return "EmptyAfterClip";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::MissingWeights: return "MissingWeights";
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::PatchLargerThanEmbedding: return "PatchLargerThanEmbedding";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::InsufficientPatches: return "InsufficientPatches";
    case ErrorKind::ClassWithoutPrototypes: return "ClassWithoutPrototypes";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::UnknownPosition: return "UnknownPosition";
    case ErrorKind::DegenerateGrid: return "DegenerateGrid";
    case ErrorKind::DegenerateNormalization: return "DegenerateNormalization";
    case ErrorKind::NoVisibleParts: return "NoVisibleParts";
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace pixrf
