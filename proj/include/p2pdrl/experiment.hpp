#ifndef P2PDRL_EXPERIMENT_HPP_
#define P2PDRL_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "p2pdrl/config.hpp"
#include "p2pdrl/evaluation.hpp"
#include "p2pdrl/metrics.hpp"
#include "p2pdrl/trainers.hpp"

namespace p2pdrl {

// A policy that can be evaluated after (or during) training.
struct NamedPolicy {
  int worker_id = 0;  // 0..K-1, or kGlobalPolicy
  const ActorParams* actor = nullptr;
  const CriticParams* critic = nullptr;  // null for the global policy
};

// The training state of one seed for any of the five algorithms.
class SeedTrainer {
 public:
  SeedTrainer(const ExperimentConfig& cfg, std::uint64_t seed);
  ~SeedTrainer();
  SeedTrainer(SeedTrainer&&) noexcept;
  SeedTrainer& operator=(SeedTrainer&&) noexcept;

  // Runs one iteration and returns its per-worker records.
  std::vector<IterationRecord> step();

  int iterations_done() const { return iteration_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::uint64_t seed() const { return seed_; }
  std::vector<NamedPolicy> policies() const;
  // Worker 0 for P2PDRL and the single-agent baselines, the global policy for
  // Distral and DnC.
  const ActorParams& headline() const;
  Rng eval_rng() const;

 private:
  struct State;
  ExperimentConfig cfg_;
  std::uint64_t seed_ = 0;
  int iteration_ = 0;
  std::int64_t env_steps_ = 0;
  std::unique_ptr<State> state_;
};

int headline_worker(Algorithm a);

// Final evaluation of every policy of a trainer at each epsilon_te, plus a
// cross-worker average row when there are several local workers. Every
// policy sees the same episode domains.
std::vector<EvalRecord> evaluate_trainer(const SeedTrainer& trainer, const ExperimentConfig& cfg,
                                         std::span<const double> epsilons);

struct RunOutputs {
  std::filesystem::path metrics;
  std::filesystem::path eval;
  std::filesystem::path curve;  // empty unless eval_every > 0
};

RunOutputs output_paths(const ExperimentConfig& cfg);

// Trains every seed until the budget is spent, writing the metrics CSV after
// each iteration, then evaluates and writes checkpoints. Output is a pure
// function of the config.
// `progress`, when set, receives one line per iteration.
using ProgressFn = std::function<void(const std::string&)>;
MetricsLog run_training(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// Mean over the final 10% of iterations (at least one) of the per-iteration
// training return, itself the mean over that iteration's worker rows.
double asymptotic_return(const std::vector<IterationRecord>& rows, std::uint64_t seed);

struct DiversityRow {
  double epsilon_tr = 0.0;
  std::uint64_t seed = 0;
  double asymptotic_return = 0.0;
  double test_return = 0.0;
  double test_stderr = 0.0;
};

struct DiversitySummary {
  double epsilon_tr = 0.0;
  double asymptotic_mean = 0.0;
  double asymptotic_stderr = 0.0;
  double test_mean = 0.0;
  double test_stderr = 0.0;
};

struct DiversityResult {
  std::vector<DiversityRow> rows;
  std::vector<DiversitySummary> summary;
};

// One full training per epsilon_tr in the grid, tested at a fixed epsilon_te.
DiversityResult train_vs_diversity(const ExperimentConfig& cfg, std::span<const double> grid,
                                   double epsilon_te, const ProgressFn& progress = {});

struct SweepRow {
  double lr = 0.0;
  double alpha = 0.0;
  double mean_asymptotic_return = 0.0;
  double stderr = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SweepRow best;
};

// Best = highest mean asymptotic return; ties go to the lower lr, then the
// lower alpha.
SweepRow pick_best(const std::vector<SweepRow>& rows);
SweepResult sweep(const ExperimentConfig& cfg, std::span<const double> lrs,
                  std::span<const double> alphas, const ProgressFn& progress = {});

// All five algorithms under one budget; joint CSVs and overlay charts.
struct CompareOutputs {
  std::filesystem::path metrics;
  std::filesystem::path eval;
};
CompareOutputs compare(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// Charts for an existing run: training return from the metrics CSV, testing
// return against epsilon_te from the eval CSV and evaluation return during
// training from the curve CSV. Empty paths are skipped.
std::vector<std::filesystem::path> plot_run(const std::filesystem::path& metrics_csv,
                                            const std::filesystem::path& eval_csv,
                                            const std::filesystem::path& curve_csv,
                                            const std::filesystem::path& out_dir,
                                            const std::string& experiment);

}  // namespace p2pdrl

#endif  // P2PDRL_EXPERIMENT_HPP_
