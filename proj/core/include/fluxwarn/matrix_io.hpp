#pragma once

#include <filesystem>
#include <iosfwd>

#include "fluxwarn/data_pipeline.hpp"

namespace fluxwarn {

// fluxmatrix v1:
//   fluxmatrix v1 <start> <step_seconds> <S> <T>
//   <segment ids, space separated>
//   T rows of S integers; -1 marks an unobserved cell.
void write_fluxmatrix(std::ostream& out, const TrafficMatrix& matrix);
TrafficMatrix read_fluxmatrix(std::istream& in);

/// Observed cells as `timestamp,segment_id,count` lines, time-major.
void write_records_csv(std::ostream& out, const TrafficMatrix& matrix, bool header = true);

/// Loads either format, detected from the first line. CSV input goes through
/// parse_records and build_matrix; `csv_header` says whether line 1 is a header.
TrafficMatrix load_traffic(const std::filesystem::path& path, bool csv_header = true);

}  // namespace fluxwarn
