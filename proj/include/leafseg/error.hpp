#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace leafseg {

enum class ErrorCode {
  FileNotFound,
  MalformedPng,
  UnsupportedPng,
  IoError,
  ConfigError,
  GridOutOfBounds,
  ImageTooSmall,
  CenterOutOfBounds,
  OutOfBounds,
  EmptyFrameList,
  DimensionMismatch,
  ShapeMismatch,
  EmptyBatch,
  EmptyDataset,
  LabelOutOfRange,
  MalformedModel,
  VersionMismatch,
  MalformedDataset,
  EmptyReport,
  CanvasTooSmall,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so
// callers (and the CLI exit-status mapping) can branch on kind, not text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace leafseg
