#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anamac {

enum class ErrorCode {
  // tensor-core
  ShapeMismatch,
  BadMagic,
  UnsupportedVersion,
  TruncatedPayload,
  DTypeMismatch,
  RankTooLarge,
  // quantize
  NonFiniteInput,
  InvalidScale,
  // chip-sim
  WeightOutOfRange,
  InputOutOfRange,
  InvalidParams,
  // graph
  UseBeforeDef,
  DoubleAssignment,
  KindMismatch,
  CycleDetected,
  MalformedInstance,
  WidthMismatch,
  // partition
  NoArrays,
  // lowering
  EmptyOutput,
  KernelTooLarge,
  // executor
  Unavailable,
  DeadlockDetected,
  // train
  MissingState,
  MissingFile,
  RaggedRow,
  LabelOutOfRange,
  LengthMismatch,
  // shared
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace anamac
