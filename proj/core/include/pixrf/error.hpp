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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pixrf {

enum class ErrorKind {
  // graph_ir
  MalformedGraph,
  CycleDetected,
  UnknownOp,
  ShapeMismatch,
  UnknownNode,
  // slice_algebra
  DimMismatch,
  EmptyAfterClip,
  // tensor container
  BadMagic,
  TruncatedFile,
  DuplicateName,
  // inference
  MissingWeights,
  NonFiniteActivation,
  // protopart
  PatchLargerThanEmbedding,
  ZeroVector,
  InsufficientPatches,
  ClassWithoutPrototypes,
  // pixel_mapping
  GridMismatch,
  UnknownPosition,
  DegenerateGrid,
  // metrics
  DegenerateNormalization,
  NoVisibleParts,
  // generic
  MalformedInput,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-readable kind so
/// front ends can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pixrf
