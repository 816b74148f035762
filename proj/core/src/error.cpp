#include "fluxwarn/error.hpp"

namespace fluxwarn {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::DuplicateCell: return "DuplicateCell";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptySegment: return "EmptySegment";
    case ErrorKind::SegmentNotFound: return "SegmentNotFound";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NoDaytimeData: return "NoDaytimeData";
    case ErrorKind::InvalidScale: return "InvalidScale";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::MisalignedStart: return "MisalignedStart";
    case ErrorKind::ConstantSeries: return "ConstantSeries";
    case ErrorKind::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorKind::PartialDay: return "PartialDay";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ParseError::ParseError(std::size_t line, const std::string& reason)
    : Error(ErrorKind::MalformedLine, "line " + std::to_string(line) + ": " + reason),
      line_(line),
      reason_(reason) {}

}  // namespace fluxwarn
