#include "fluxwarn/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <string_view>
#include <unordered_map>

#include "fluxwarn/error.hpp"

namespace fluxwarn {
namespace {

std::string_view trim_cr(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  return line;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

bool valid_segment_id(std::string_view id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(), [](unsigned char c) {
    return c <= ' ' || c == ',' || c == '"' || c == 0x7f;
  });
}

}  // namespace

std::optional<std::size_t> TrafficMatrix::segment_index(const std::string& id) const {
  const auto it = std::find(segments.begin(), segments.end(), id);
  if (it == segments.end()) return std::nullopt;
  return static_cast<std::size_t>(it - segments.begin());
}

std::size_t TrafficMatrix::require_segment(const std::string& id) const {
  if (auto idx = segment_index(id)) return *idx;
  throw Error(ErrorKind::SegmentNotFound, "segment '" + id + "' not present");
}

FluxRecord parse_record_line(std::string_view line, std::size_t line_no) {
  line = trim_cr(line);
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    fields.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                     : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (fields.size() != 3) {
    throw ParseError(line_no, "expected 3 fields, found " + std::to_string(fields.size()));
  }

  const auto ts = parse_instant(fields[0]);
  if (!ts) throw ParseError(line_no, "bad timestamp '" + std::string(fields[0]) + "'");
  if (!is_bin_aligned(*ts)) {
    throw ParseError(line_no, "timestamp '" + std::string(fields[0]) + "' not 10-minute aligned");
  }
  if (!valid_segment_id(fields[1])) {
    throw ParseError(line_no, "bad segment id '" + std::string(fields[1]) + "'");
  }

  const std::string_view count_text = fields[2];
  std::int64_t count = 0;
  const auto [ptr, ec] =
      std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
  if (count_text.empty() || ec != std::errc{} || ptr != count_text.data() + count_text.size()) {
    throw ParseError(line_no, "bad count '" + std::string(count_text) + "'");
  }
  if (count < 0) throw ParseError(line_no, "negative count " + std::to_string(count));

  return FluxRecord{*ts, std::string(fields[1]), count};
}

std::vector<FluxRecord> parse_records(std::istream& in, bool has_header) {
  std::vector<FluxRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && has_header) continue;
    if (is_blank(line)) continue;
    out.push_back(parse_record_line(line, line_no));
  }
  return out;
}

TrafficMatrix build_matrix(std::span<const FluxRecord> records) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no flux records");

  Instant first = records.front().timestamp;
  Instant last = first;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    if (!is_bin_aligned(r.timestamp)) {
      throw Error(ErrorKind::InvalidArgument,
                  "record at " + format_instant(r.timestamp) + " not 10-minute aligned");
    }
    if (r.count < 0) throw Error(ErrorKind::InvalidArgument, "negative count");
    first = std::min(first, r.timestamp);
    last = std::max(last, r.timestamp);
    index.emplace(r.segment_id, 0);
  }

  TrafficMatrix m;
  m.start = first;
  m.step = kBinStep;
  m.segments.reserve(index.size());
  for (auto& [id, col] : index) {
    col = m.segments.size();
    m.segments.push_back(id);
  }
  const auto rows = static_cast<Eigen::Index>((last - first) / kBinStep + 1);
  const auto cols = static_cast<Eigen::Index>(m.segments.size());
  m.values = Eigen::MatrixXd::Zero(rows, cols);
  m.mask = MaskMatrix::Constant(rows, cols, false);

  for (const auto& r : records) {
    const auto row = static_cast<Eigen::Index>((r.timestamp - first) / kBinStep);
    const auto col = static_cast<Eigen::Index>(index.at(r.segment_id));
    if (m.mask(row, col)) {
      throw Error(ErrorKind::DuplicateCell,
                  "(" + format_instant(r.timestamp) + ", " + r.segment_id + ") appears twice");
    }
    m.mask(row, col) = true;
    m.values(row, col) = static_cast<double>(r.count);
  }
  return m;
}

std::vector<FluxRecord> flatten_observed(const TrafficMatrix& matrix) {
  std::vector<FluxRecord> out;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t s = 0; s < matrix.cols(); ++s) {
      const auto ri = static_cast<Eigen::Index>(r);
      const auto si = static_cast<Eigen::Index>(s);
      if (!matrix.mask(ri, si)) continue;
      out.push_back({matrix.time_at(r), matrix.segments[s],
                     static_cast<std::int64_t>(std::llround(matrix.values(ri, si)))});
    }
  }
  return out;
}

TrafficMatrix impute(const TrafficMatrix& matrix) {
  TrafficMatrix out = matrix;
  const Eigen::Index rows = out.values.rows();
  for (Eigen::Index s = 0; s < out.values.cols(); ++s) {
    Eigen::Index first_obs = -1;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (out.mask(r, s)) {
        first_obs = r;
        break;
      }
    }
    if (first_obs < 0) {
      throw Error(ErrorKind::EmptySegment,
                  "segment '" + out.segments[static_cast<std::size_t>(s)] + "' has no observations");
    }
    for (Eigen::Index r = 0; r < first_obs; ++r) out.values(r, s) = out.values(first_obs, s);
    double last = out.values(first_obs, s);
    for (Eigen::Index r = first_obs; r < rows; ++r) {
      if (out.mask(r, s)) {
        last = out.values(r, s);
      } else {
        out.values(r, s) = last;
      }
    }
  }
  out.mask.setConstant(true);
  return out;
}

std::size_t window_count(std::size_t rows, int lookback, int horizon) {
  const auto span = static_cast<std::size_t>(lookback + horizon);
  return rows >= span ? rows - span + 1 : 0;
}

SupervisedWindowSet make_windows(const TrafficMatrix& matrix, const std::string& target,
                                 int lookback, int horizon) {
  if (lookback <= 0 || horizon <= 0) {
    throw Error(ErrorKind::InvalidArgument, "lookback and horizon must be positive");
  }
  const std::size_t col = matrix.require_segment(target);
  if (!matrix.fully_observed()) {
    throw Error(ErrorKind::InvalidArgument, "matrix must be imputed before windowing");
  }
  const std::size_t n = window_count(matrix.rows(), lookback, horizon);
  if (n == 0) {
    throw Error(ErrorKind::InsufficientHistory,
                std::to_string(matrix.rows()) + " rows < lookback + horizon = " +
                    std::to_string(lookback + horizon));
  }

  SupervisedWindowSet set;
  set.target_segment = target;
  set.target_column = col;
  set.segments = matrix.segments;
  set.lookback = lookback;
  set.horizon = horizon;
  set.inputs.reserve(n);
  set.targets.reserve(n);
  set.target_times.reserve(n);
  const auto ci = static_cast<Eigen::Index>(col);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r0 = static_cast<Eigen::Index>(i);
    set.inputs.emplace_back(matrix.values.middleRows(r0, lookback));
    set.targets.emplace_back(matrix.values.col(ci).segment(r0 + lookback, horizon));
    set.target_times.push_back(matrix.time_at(i + static_cast<std::size_t>(lookback)));
  }
  return set;
}

NormStats fit_norm(const Eigen::MatrixXd& grid) {
  NormStats stats;
  const auto n = static_cast<double>(grid.rows());
  stats.mean = grid.colwise().mean().transpose();
  stats.std.resize(grid.cols());
  for (Eigen::Index s = 0; s < grid.cols(); ++s) {
    const double var = n > 0 ? (grid.col(s).array() - stats.mean(s)).square().sum() / n : 0.0;
    stats.std(s) = std::max(std::sqrt(var), NormStats::kStdFloor);
  }
  return stats;
}

NormStats fit_norm(const TrafficMatrix& matrix) {
  if (!matrix.fully_observed()) {
    throw Error(ErrorKind::InvalidArgument, "matrix must be imputed before fitting norm");
  }
  return fit_norm(matrix.values);
}

Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& grid, const NormStats& stats) {
  if (static_cast<std::size_t>(grid.cols()) != stats.size()) {
    throw Error(ErrorKind::DimensionMismatch, "grid has " + std::to_string(grid.cols()) +
                                                  " columns, stats cover " +
                                                  std::to_string(stats.size()));
  }
  return (grid.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.std.transpose().array();
}

TrafficMatrix apply_norm(const TrafficMatrix& matrix, const NormStats& stats) {
  TrafficMatrix out = matrix;
  out.values = apply_norm(matrix.values, stats);
  return out;
}

Eigen::VectorXd invert_norm(const Eigen::VectorXd& values, const NormStats& stats,
                            std::size_t segment) {
  if (segment >= stats.size()) {
    throw Error(ErrorKind::DimensionMismatch, "segment index out of range");
  }
  const auto s = static_cast<Eigen::Index>(segment);
  return (values.array() * stats.std(s) + stats.mean(s)).matrix();
}

std::vector<double> invert_norm(std::span<const double> values, const NormStats& stats,
                                std::size_t segment) {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                        static_cast<Eigen::Index>(values.size()));
  const Eigen::VectorXd r = invert_norm(v, stats, segment);
  return {r.data(), r.data() + r.size()};
}

TrafficMatrix slice_rows(const TrafficMatrix& matrix, std::size_t first, std::size_t count) {
  if (first + count > matrix.rows()) {
    throw Error(ErrorKind::InvalidArgument, "row slice out of range");
  }
  TrafficMatrix out;
  out.start = matrix.time_at(first);
  out.step = matrix.step;
  out.segments = matrix.segments;
  out.values = matrix.values.middleRows(static_cast<Eigen::Index>(first),
                                        static_cast<Eigen::Index>(count));
  out.mask = matrix.mask.middleRows(static_cast<Eigen::Index>(first),
                                    static_cast<Eigen::Index>(count));
  return out;
}

}  // namespace fluxwarn
