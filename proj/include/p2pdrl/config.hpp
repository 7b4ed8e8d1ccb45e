#ifndef P2PDRL_CONFIG_HPP_
#define P2PDRL_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "p2pdrl/envs.hpp"
#include "p2pdrl/trainers.hpp"

namespace p2pdrl {

enum class Algorithm { kP2pdrl, kPpo, kDppo, kDistral, kDnc };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::kP2pdrl, Algorithm::kPpo,
                                               Algorithm::kDppo, Algorithm::kDistral,
                                               Algorithm::kDnc};

std::string_view to_string(Algorithm a);
// Throws ConfigError("algorithm", ...) for unknown names.
Algorithm parse_algorithm(std::string_view text);

// 48 iterations of K*T = 4096 steps; the largest multiple of 4096 that
// fits in 200k.
inline constexpr std::int64_t kDefaultBudget = 196608;

struct ExperimentConfig {
  std::string experiment = "run";
  Algorithm algorithm = Algorithm::kP2pdrl;
  std::string task = "pendulum";
  double epsilon_tr = 0.2;
  std::vector<double> epsilon_te{0.0, 0.2, 0.5, 0.8, 1.0};
  WindPartition partition = WindPartition::kNone;
  Hyperparams hp;
  std::int64_t total_env_steps = kDefaultBudget;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7};
  int eval_episodes = 10;       // M
  int eval_every = 0;           // iterations between learning-curve evals; 0 = off
  double curve_epsilon_te = 0.2;
  bool stochastic_eval = false;
  bool save_checkpoints = true;
  std::filesystem::path output_dir = "results";

  // Grids for the sweep and diversity drivers.
  std::vector<double> sweep_lr{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  std::vector<double> sweep_alpha{0.1, 0.3, 1.0, 3.0, 10.0};
  std::vector<double> diversity_grid{0.0, 0.2, 0.4, 0.6, 0.8};
  double diversity_epsilon_te = 0.5;

  int iterations() const;
  EnvSpec env_spec() const;
  RandomizationConfig train_randomization() const;
  // Throws ConfigError naming the first invalid key.
  void validate() const;
};

// Applies one "key = value" assignment. Unknown keys and malformed values are
// ConfigErrors naming the key.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// Flat text format: one "key = value" per line, '#' starts a comment, lists
// are comma separated.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Inverse of parse_config; every key is written.
std::string format_config(const ExperimentConfig& cfg);

}  // namespace p2pdrl

#endif  // P2PDRL_CONFIG_HPP_
