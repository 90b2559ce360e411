#include "leafseg/error.hpp"

namespace leafseg {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MalformedPng: return "MalformedPng";
    case ErrorCode::UnsupportedPng: return "UnsupportedPng";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::GridOutOfBounds: return "GridOutOfBounds";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::CenterOutOfBounds: return "CenterOutOfBounds";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::EmptyFrameList: return "EmptyFrameList";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MalformedDataset: return "MalformedDataset";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::CanvasTooSmall: return "CanvasTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace leafseg
