#ifndef P2PDRL_ROLLOUT_HPP_
#define P2PDRL_ROLLOUT_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "p2pdrl/envs.hpp"
#include "p2pdrl/policy.hpp"
#include "p2pdrl/rng.hpp"
#include "p2pdrl/tensor.hpp"

namespace p2pdrl {

// Independent random streams owned by one worker, plus its current domain.
struct WorkerStreams {
  Rng domain_rng;
  Rng env_rng;
  Rng policy_rng;
  Rng minibatch_rng;
  Rng diagnostic_rng;
  DomainParams domain;
  bool has_domain = false;

  static WorkerStreams from(const Rng& worker_stream);
};

// T transitions collected by one policy. Episodes that end inside the window
// are reset in place; done marks both task termination and the time limit.
struct Trajectory {
  Tensor observations;              // T x obs_dim
  Tensor actions;                   // T x action_dim (raw policy sample)
  Tensor env_states;                // T x state_dim (state the action was taken in)
  std::vector<DomainParams> domains;  // domain each step ran in
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  // V(s_{t+1}) for steps cut by the time limit (0 elsewhere and for true
  // terminations); only filled when the rollout bootstraps time limits.
  std::vector<double> timeout_values;
  std::vector<double> values;       // V(s_t) at collection time
  std::vector<double> log_probs;    // behaviour log pi(a_t | s_t)
  double bootstrap_value = 0.0;     // V(s_T) if the last step is non-terminal, else 0
  std::vector<double> advantages;   // filled by compute_gae
  std::vector<double> targets;      // filled by compute_gae
  std::vector<double> episode_returns;  // completed episodes only
  double unfinished_return = 0.0;   // partial return of the episode cut off at T

  std::size_t size() const { return rewards.size(); }
  bool has_advantages() const { return advantages.size() == size() && !empty(); }
  bool empty() const { return rewards.empty(); }

  // Mean completed-episode return; falls back to the partial return when no
  // episode finished inside the window.
  double mean_episode_return() const;
};

struct RolloutOptions {
  // Fresh domain after every episode end when non-null.
  const RandomizationConfig* resample = nullptr;
  // Store V of the pre-reset state for time-limit cutoffs so GAE can
  // bootstrap through them instead of treating them as terminal.
  bool bootstrap_time_limit = false;
};

// Rolls the actor for T steps in streams.domain.
Trajectory collect_rollout(const ActorParams& actor, const CriticParams& critic,
                           WorkerStreams& streams, const EnvSpec& spec, int steps,
                           const RolloutOptions& options = {});

void compute_gae(Trajectory& traj, double gamma, double lambda);

// Zero mean, unit (population) std.
void normalize_advantages(std::span<double> advantages);

// Concatenates trajectories in order (for pooled updates).
Trajectory concatenate(std::span<const Trajectory> parts);

struct Minibatch {
  Tensor states;
  Tensor actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> targets;
  std::vector<double> old_values;

  std::size_t size() const { return old_log_probs.size(); }
};

Minibatch gather(const Trajectory& traj, std::span<const std::size_t> indices);
Tensor gather_rows(const Tensor& t, std::span<const std::size_t> indices);

// Splits a permutation into consecutive chunks of `size`; the last chunk may
// be shorter.
std::vector<std::span<const std::size_t>> split_minibatches(
    std::span<const std::size_t> order, std::size_t size);

}  // namespace p2pdrl

#endif  // P2PDRL_ROLLOUT_HPP_
