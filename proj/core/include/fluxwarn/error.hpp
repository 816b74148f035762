#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fluxwarn {

enum class ErrorKind {
  MalformedLine,
  DuplicateCell,
  EmptyInput,
  EmptySegment,
  SegmentNotFound,
  InsufficientHistory,
  DimensionMismatch,
  EmptyDataset,
  InvalidArgument,
  NoDaytimeData,
  InvalidScale,
  DegenerateSample,
  NonConvergence,
  LengthMismatch,
  MisalignedStart,
  ConstantSeries,
  InsufficientOverlap,
  PartialDay,
  InvalidSpec,
  SchemaMismatch,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A rejected input line; `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason);

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

}  // namespace fluxwarn
