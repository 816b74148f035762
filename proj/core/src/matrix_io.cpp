#include "fluxwarn/matrix_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "fluxwarn/error.hpp"

namespace fluxwarn {

namespace {
constexpr std::string_view kMagic = "fluxmatrix";
}

void write_fluxmatrix(std::ostream& out, const TrafficMatrix& m) {
  out << kMagic << " v1 " << format_instant(m.start) << ' ' << m.step.count() << ' '
      << m.cols() << ' ' << m.rows() << '\n';
  for (std::size_t s = 0; s < m.cols(); ++s) {
    if (s) out << ' ';
    out << m.segments[s];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    for (Eigen::Index s = 0; s < m.values.cols(); ++s) {
      if (s) out << ' ';
      out << (m.mask(r, s) ? std::llround(m.values(r, s)) : -1LL);
    }
    out << '\n';
  }
}

TrafficMatrix read_fluxmatrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyInput, "empty fluxmatrix stream");
  std::istringstream header(line);
  std::string magic, version, start_text;
  long long step = 0, s_count = -1, t_count = -1;
  header >> magic >> version >> start_text >> step >> s_count >> t_count;
  if (!header || magic != kMagic || version != "v1") {
    throw ParseError(1, "expected 'fluxmatrix v1 <start> <step> <S> <T>'");
  }
  const auto start = parse_instant(start_text);
  if (!start) throw ParseError(1, "bad start instant '" + start_text + "'");
  if (step <= 0 || s_count <= 0 || t_count <= 0) throw ParseError(1, "non-positive dimensions");

  TrafficMatrix m;
  m.start = *start;
  m.step = Seconds{step};
  if (!std::getline(in, line)) throw ParseError(2, "missing segment id line");
  std::istringstream ids(line);
  for (std::string id; ids >> id;) m.segments.push_back(id);
  if (static_cast<long long>(m.segments.size()) != s_count) {
    throw ParseError(2, "expected " + std::to_string(s_count) + " segment ids");
  }
  m.values = Eigen::MatrixXd::Zero(t_count, s_count);
  m.mask = MaskMatrix::Constant(t_count, s_count, false);
  for (Eigen::Index r = 0; r < t_count; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 3;
    if (!std::getline(in, line)) throw ParseError(line_no, "missing row");
    std::istringstream row(line);
    for (Eigen::Index s = 0; s < s_count; ++s) {
      long long v = 0;
      if (!(row >> v)) throw ParseError(line_no, "row too short");
      if (v < -1) throw ParseError(line_no, "invalid count " + std::to_string(v));
      if (v >= 0) {
        m.values(r, s) = static_cast<double>(v);
        m.mask(r, s) = true;
      }
    }
    std::string extra;
    if (row >> extra) throw ParseError(line_no, "row too long");
  }
  return m;
}

void write_records_csv(std::ostream& out, const TrafficMatrix& matrix, bool header) {
  if (header) out << "timestamp,segment_id,count\n";
  for (const auto& rec : flatten_observed(matrix)) {
    out << format_instant(rec.timestamp) << ',' << rec.segment_id << ',' << rec.count << '\n';
  }
}

TrafficMatrix load_traffic(const std::filesystem::path& path, bool csv_header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::string first;
  std::getline(in, first);
  in.clear();
  in.seekg(0);
  if (first.rfind(kMagic, 0) == 0) return read_fluxmatrix(in);
  const auto records = parse_records(in, csv_header);
  return build_matrix(records);
}

}  // namespace fluxwarn
