#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fluxwarn/time.hpp"

namespace fluxwarn {

using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// One 10-minute vehicle count for one road segment.
struct FluxRecord {
  Instant timestamp;
  std::string segment_id;
  std::int64_t count = 0;

  friend bool operator==(const FluxRecord&, const FluxRecord&) = default;
};

/// Dense time-bin x segment grid of counts. Row r covers [start + r*step, start + (r+1)*step).
/// `mask(r, s)` is true where the cell was observed; unobserved cells hold 0 in `values`.
struct TrafficMatrix {
  Instant start{};
  Seconds step = kBinStep;
  std::vector<std::string> segments;
  Eigen::MatrixXd values;
  MaskMatrix mask;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
  Instant time_at(std::size_t row) const { return start + step * static_cast<std::int64_t>(row); }
  std::optional<std::size_t> segment_index(const std::string& id) const;
  /// Throws SegmentNotFound.
  std::size_t require_segment(const std::string& id) const;
  bool fully_observed() const { return mask.all(); }
};

/// Supervised windows for a single target segment. `inputs[i]` is lookback x S,
/// `targets[i]` holds the next `horizon` values of the target column and
/// `target_times[i]` is the instant of the first target step.
struct SupervisedWindowSet {
  std::string target_segment;
  std::size_t target_column = 0;
  std::vector<std::string> segments;
  int lookback = 6;
  int horizon = 3;
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::VectorXd> targets;
  std::vector<Instant> target_times;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
};

/// Per-segment z-score statistics.
struct NormStats {
  static constexpr double kStdFloor = 1e-6;

  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
};

/// Reads `timestamp,segment_id,count` lines. Blank lines are ignored; every other
/// line must be valid or a ParseError naming its 1-based line number is thrown.
std::vector<FluxRecord> parse_records(std::istream& in, bool has_header = false);

/// Parses a single CSV line (no header handling).
FluxRecord parse_record_line(std::string_view line, std::size_t line_no);

/// Assembles records into a gap-free time axis; segments are sorted by id.
TrafficMatrix build_matrix(std::span<const FluxRecord> records);

/// Mask-true cells in time-major, segment order.
std::vector<FluxRecord> flatten_observed(const TrafficMatrix& matrix);

/// Forward-fills each column, then backfills a leading gap. Result is fully observed.
TrafficMatrix impute(const TrafficMatrix& matrix);

SupervisedWindowSet make_windows(const TrafficMatrix& matrix, const std::string& target,
                                 int lookback = 6, int horizon = 3);

/// Number of stride-1 windows that fit in `rows` time bins (0 when none fit).
std::size_t window_count(std::size_t rows, int lookback, int horizon);

/// Population mean/std per column over all rows.
NormStats fit_norm(const TrafficMatrix& matrix);
/// Column statistics over an arbitrary row-stacked grid (rows = samples).
NormStats fit_norm(const Eigen::MatrixXd& grid);

TrafficMatrix apply_norm(const TrafficMatrix& matrix, const NormStats& stats);
/// Normalizes a rows x S grid column-wise.
Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& grid, const NormStats& stats);
std::vector<double> invert_norm(std::span<const double> values, const NormStats& stats,
                                std::size_t segment);
Eigen::VectorXd invert_norm(const Eigen::VectorXd& values, const NormStats& stats,
                            std::size_t segment);

/// Slices rows [first, first + count) keeping segments, mask and timing.
TrafficMatrix slice_rows(const TrafficMatrix& matrix, std::size_t first, std::size_t count);

}  // namespace fluxwarn
