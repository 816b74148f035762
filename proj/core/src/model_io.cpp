#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "fluxwarn/error.hpp"
#include "fluxwarn/forecast.hpp"

namespace fluxwarn {
namespace {

constexpr std::string_view kHeader = "fluxmodel v1";

std::string real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_real(const std::string& text, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(line, "bad real '" + text + "'");
  }
  return v;
}

void write_block(std::ostream& out, std::string_view name, const Eigen::MatrixXd& m) {
  out << "block " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << real(m(r, c));
    }
    out << '\n';
  }
}

class LineReader {
 public:
  LineReader(std::istream& in, std::size_t consumed) : in_(in), line_(consumed) {}

  std::istringstream next(std::string_view what) {
    std::string line;
    do {
      if (!std::getline(in_, line)) throw ParseError(line_ + 1, "unexpected end, wanted " + std::string(what));
      ++line_;
    } while (line.empty());
    return std::istringstream(line);
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_;
};

template <class T>
T field(std::istringstream& s, std::size_t line, std::string_view key) {
  T v{};
  if (!(s >> v)) throw ParseError(line, "missing value for '" + std::string(key) + "'");
  return v;
}

std::istringstream keyed(LineReader& r, std::string_view key) {
  auto s = r.next(key);
  std::string k;
  s >> k;
  if (k != key) throw ParseError(r.line(), "expected '" + std::string(key) + "', found '" + k + "'");
  return s;
}

Eigen::MatrixXd read_block(LineReader& r, std::string_view name) {
  auto head = keyed(r, "block");
  std::string found;
  Eigen::Index rows = 0, cols = 0;
  head >> found >> rows >> cols;
  if (!head || found != name || rows < 0 || cols < 0) {
    throw ParseError(r.line(), "expected block '" + std::string(name) + "'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    auto row = r.next(name);
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::string tok;
      if (!(row >> tok)) throw ParseError(r.line(), "short row in block '" + std::string(name) + "'");
      m(i, j) = parse_real(tok, r.line());
    }
  }
  return m;
}

}  // namespace

void save_model(std::ostream& out, const ForecastModel& model) {
  const auto& c = model.config;
  out << kHeader << '\n';
  out << "target " << model.target_segment << '\n';
  out << "target_column " << model.target_column << '\n';
  out << "lookback " << model.lookback << '\n';
  out << "horizon " << model.horizon << '\n';
  out << "inputs " << model.params.inputs() << '\n';
  out << "hidden " << model.params.hidden() << '\n';
  out << "segments " << model.segments.size();
  for (const auto& s : model.segments) out << ' ' << s;
  out << '\n';
  out << "config learning_rate " << real(c.learning_rate) << " epochs " << c.epochs
      << " batch_size " << c.batch_size << " validation_split " << real(c.validation_split)
      << " hidden_size " << c.hidden_size << " seed " << c.seed << '\n';
  out << "history " << model.history.size() << '\n';
  for (const auto& h : model.history) {
    out << h.epoch << ' ' << real(h.train_loss) << ' ' << real(h.val_loss) << '\n';
  }
  write_block(out, "norm_mean", model.norm.mean);
  write_block(out, "norm_std", model.norm.std);
  const LstmParams& p = model.params;
  write_block(out, "input_weights", p.input_weights);
  write_block(out, "recurrent_weights", p.recurrent_weights);
  write_block(out, "bias", p.bias);
  write_block(out, "output_weights", p.output_weights);
  write_block(out, "output_bias", p.output_bias);
  out << "end\n";
}

ForecastModel load_model(std::istream& in) {
  {
    std::string line;
    if (!std::getline(in, line) || line != kHeader) {
      throw ParseError(1, "expected '" + std::string(kHeader) + "'");
    }
  }
  LineReader r(in, 1);
  ForecastModel m;
  auto s = keyed(r, "target");
  m.target_segment = field<std::string>(s, r.line(), "target");
  s = keyed(r, "target_column");
  m.target_column = field<std::size_t>(s, r.line(), "target_column");
  s = keyed(r, "lookback");
  m.lookback = field<int>(s, r.line(), "lookback");
  s = keyed(r, "horizon");
  m.horizon = field<int>(s, r.line(), "horizon");
  s = keyed(r, "inputs");
  const auto inputs = field<Eigen::Index>(s, r.line(), "inputs");
  s = keyed(r, "hidden");
  const auto hidden = field<Eigen::Index>(s, r.line(), "hidden");
  s = keyed(r, "segments");
  const auto n_seg = field<std::size_t>(s, r.line(), "segments");
  for (std::size_t i = 0; i < n_seg; ++i) m.segments.push_back(field<std::string>(s, r.line(), "segments"));

  s = keyed(r, "config");
  std::map<std::string, std::string> cfg;
  for (std::string k, v; s >> k >> v;) cfg[k] = v;
  auto cfg_value = [&](const std::string& key) {
    auto it = cfg.find(key);
    if (it == cfg.end()) throw ParseError(r.line(), "config lacks '" + key + "'");
    return it->second;
  };
  m.config.learning_rate = parse_real(cfg_value("learning_rate"), r.line());
  m.config.epochs = std::stoi(cfg_value("epochs"));
  m.config.batch_size = std::stoi(cfg_value("batch_size"));
  m.config.validation_split = parse_real(cfg_value("validation_split"), r.line());
  m.config.hidden_size = std::stoi(cfg_value("hidden_size"));
  m.config.seed = std::stoull(cfg_value("seed"));

  s = keyed(r, "history");
  const auto n_hist = field<std::size_t>(s, r.line(), "history");
  for (std::size_t i = 0; i < n_hist; ++i) {
    auto row = r.next("history row");
    EpochLoss e;
    std::string tl, vl;
    row >> e.epoch >> tl >> vl;
    if (!row) throw ParseError(r.line(), "bad history row");
    e.train_loss = parse_real(tl, r.line());
    e.val_loss = parse_real(vl, r.line());
    m.history.push_back(e);
  }

  m.norm.mean = read_block(r, "norm_mean");
  m.norm.std = read_block(r, "norm_std");
  m.params.input_weights = read_block(r, "input_weights");
  m.params.recurrent_weights = read_block(r, "recurrent_weights");
  m.params.bias = read_block(r, "bias");
  m.params.output_weights = read_block(r, "output_weights");
  m.params.output_bias = read_block(r, "output_bias");
  keyed(r, "end");

  m.params.check_consistent();
  if (m.params.inputs() != inputs || m.params.hidden() != hidden ||
      m.params.horizon() != m.horizon || m.norm.size() != static_cast<std::size_t>(inputs) ||
      m.segments.size() != static_cast<std::size_t>(inputs) ||
      m.target_column >= m.segments.size() || m.segments[m.target_column] != m.target_segment) {
    throw Error(ErrorKind::SchemaMismatch, "model header disagrees with its parameter blocks");
  }
  return m;
}

void save_model(const std::filesystem::path& path, const ForecastModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  save_model(out, model);
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

ForecastModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return load_model(in);
}

}  // namespace fluxwarn
