#ifndef P2PDRL_METRICS_HPP_
#define P2PDRL_METRICS_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace p2pdrl {

// Worker ids used in output rows besides the per-worker 0..K-1.
inline constexpr int kWorkerAverage = -1;  // cross-worker average
inline constexpr int kGlobalPolicy = -2;   // Distral / DnC global policy

inline constexpr std::string_view kMetricsHeader =
    "iteration,env_steps,seed,worker_id,mean_episode_return,ppo_loss,distill_loss,"
    "value_loss,grad_variance_log";
inline constexpr std::string_view kEvalHeader = "epsilon_te,seed,worker_id,mean_return,stderr";
inline constexpr std::string_view kCurveHeader =
    "iteration,env_steps,epsilon_te,seed,worker_id,mean_return,stderr";

struct IterationRecord {
  int iteration = 0;           // 1-based
  std::int64_t env_steps = 0;  // cumulative for this seed
  std::uint64_t seed = 0;
  int worker_id = 0;
  double mean_episode_return = 0.0;
  double ppo_loss = 0.0;
  double distill_loss = 0.0;
  double value_loss = 0.0;
  double grad_variance_log = 0.0;
};

struct EvalRecord {
  double epsilon_te = 0.0;
  std::uint64_t seed = 0;
  int worker_id = 0;
  double mean_return = 0.0;
  double stderr = 0.0;
};

// Evaluation during training (learning curves).
struct CurveRecord {
  int iteration = 0;  // 0 = before any update
  std::int64_t env_steps = 0;
  double epsilon_te = 0.0;
  std::uint64_t seed = 0;
  int worker_id = 0;
  double mean_return = 0.0;
  double stderr = 0.0;
};

struct MetricsLog {
  std::vector<IterationRecord> iterations;
  std::vector<EvalRecord> evals;
  std::vector<CurveRecord> curves;
};

// Doubles are written with 17 significant digits so parsing gives back the
// same bits; NaN is written as "nan".
std::string format_row(const IterationRecord& r);
std::string format_row(const EvalRecord& r);
std::string format_row(const CurveRecord& r);

std::vector<IterationRecord> parse_metrics_csv(std::string_view text);
std::vector<EvalRecord> parse_eval_csv(std::string_view text);
std::vector<CurveRecord> parse_curve_csv(std::string_view text);

std::string metrics_csv(const std::vector<IterationRecord>& rows);
std::string eval_csv(const std::vector<EvalRecord>& rows);
std::string curve_csv(const std::vector<CurveRecord>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Append-only CSV file: header on open, flushed after every row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view header);
  void write_line(const std::string& line);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// Splits one CSV line on commas (no quoting is ever produced).
std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace p2pdrl

#endif  // P2PDRL_METRICS_HPP_
