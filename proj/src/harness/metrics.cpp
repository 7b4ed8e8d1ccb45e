#include "p2pdrl/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "p2pdrl/errors.hpp"

namespace p2pdrl {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view s) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError("bad number '" + std::string(s) + "' in CSV");
  }
  return v;
}

template <class Int>
Int parse_int(std::string_view s) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError("bad integer '" + std::string(s) + "' in CSV");
  }
  return v;
}

// Calls row_fn(fields) for every data line after checking the header.
template <class Fn>
void for_each_row(std::string_view text, std::string_view header, std::size_t width, Fn row_fn) {
  std::size_t start = 0;
  bool first = true;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (first) {
      if (line != header) throw IoError("unexpected CSV header '" + std::string(line) + "'");
      first = false;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != width) throw IoError("CSV row has wrong width: " + std::string(line));
    row_fn(fields);
  }
  if (first) throw IoError("CSV is empty (no header)");
}

template <class Row>
std::string to_csv(std::string_view header, const std::vector<Row>& rows) {
  std::string out(header);
  out += '\n';
  for (const Row& r : rows) {
    out += format_row(r);
    out += '\n';
  }
  return out;
}

}  // namespace

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_row(const IterationRecord& r) {
  return std::to_string(r.iteration) + ',' + std::to_string(r.env_steps) + ',' +
         std::to_string(r.seed) + ',' + std::to_string(r.worker_id) + ',' +
         fmt(r.mean_episode_return) + ',' + fmt(r.ppo_loss) + ',' + fmt(r.distill_loss) + ',' +
         fmt(r.value_loss) + ',' + fmt(r.grad_variance_log);
}

std::string format_row(const EvalRecord& r) {
  return fmt(r.epsilon_te) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.worker_id) +
         ',' + fmt(r.mean_return) + ',' + fmt(r.stderr);
}

std::string format_row(const CurveRecord& r) {
  return std::to_string(r.iteration) + ',' + std::to_string(r.env_steps) + ',' +
         fmt(r.epsilon_te) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.worker_id) +
         ',' + fmt(r.mean_return) + ',' + fmt(r.stderr);
}

std::vector<IterationRecord> parse_metrics_csv(std::string_view text) {
  std::vector<IterationRecord> rows;
  for_each_row(text, kMetricsHeader, 9, [&](const std::vector<std::string_view>& f) {
    rows.push_back({parse_int<int>(f[0]), parse_int<std::int64_t>(f[1]),
                    parse_int<std::uint64_t>(f[2]), parse_int<int>(f[3]), parse_double(f[4]),
                    parse_double(f[5]), parse_double(f[6]), parse_double(f[7]),
                    parse_double(f[8])});
  });
  return rows;
}

std::vector<EvalRecord> parse_eval_csv(std::string_view text) {
  std::vector<EvalRecord> rows;
  for_each_row(text, kEvalHeader, 5, [&](const std::vector<std::string_view>& f) {
    rows.push_back({parse_double(f[0]), parse_int<std::uint64_t>(f[1]), parse_int<int>(f[2]),
                    parse_double(f[3]), parse_double(f[4])});
  });
  return rows;
}

std::vector<CurveRecord> parse_curve_csv(std::string_view text) {
  std::vector<CurveRecord> rows;
  for_each_row(text, kCurveHeader, 7, [&](const std::vector<std::string_view>& f) {
    rows.push_back({parse_int<int>(f[0]), parse_int<std::int64_t>(f[1]), parse_double(f[2]),
                    parse_int<std::uint64_t>(f[3]), parse_int<int>(f[4]), parse_double(f[5]),
                    parse_double(f[6])});
  });
  return rows;
}

std::string metrics_csv(const std::vector<IterationRecord>& rows) {
  return to_csv(kMetricsHeader, rows);
}
std::string eval_csv(const std::vector<EvalRecord>& rows) { return to_csv(kEvalHeader, rows); }
std::string curve_csv(const std::vector<CurveRecord>& rows) { return to_csv(kCurveHeader, rows); }

namespace {

void ensure_parent_dir(const std::filesystem::path& path) {
  if (!path.has_parent_path()) return;
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::string_view header) : path_(path) {
  ensure_parent_dir(path);
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << header << '\n';
  out_.flush();
}

void CsvWriter::write_line(const std::string& line) {
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw IoError("failed writing " + path_.string());
}

}  // namespace p2pdrl
