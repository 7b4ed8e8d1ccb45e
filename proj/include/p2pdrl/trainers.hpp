#ifndef P2PDRL_TRAINERS_HPP_
#define P2PDRL_TRAINERS_HPP_

#include <cstdint>
#include <limits>
#include <vector>

#include "p2pdrl/adam.hpp"
#include "p2pdrl/envs.hpp"
#include "p2pdrl/losses.hpp"
#include "p2pdrl/policy.hpp"
#include "p2pdrl/rollout.hpp"

namespace p2pdrl {

struct Hyperparams {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double alpha = 1.0;          // distillation coefficient
  double lr = 1e-3;           // best of the 1e-3 / 3e-3 sweep on pendulum
  int workers = 2;             // K
  int steps_per_worker = 2048; // T
  int epochs = 10;
  int minibatch = 64;
  int dnc_period = 10;         // DnC reset period R, in iterations

  bool normalize_advantages = true;
  bool snapshot_per_epoch = false;  // freeze peer copies at epoch start
  bool resample_per_episode = false;
  bool bootstrap_time_limit = true;  // bootstrap V through time-limit cutoffs
  bool log_grad_variance = true;

  // Off unless set: entropy bonus, value clipping, global grad-norm clipping.
  double entropy_coef = 0.0;
  double value_clip = 0.0;
  double max_grad_norm = 0.0;

  void validate() const;
};

struct WorkerMetrics {
  int worker_id = 0;
  double mean_episode_return = 0.0;
  double ppo_loss = 0.0;
  double distill_loss = 0.0;
  double value_loss = 0.0;
  double grad_variance_log = 0.0;
};

struct IterationResult {
  std::int64_t env_steps = 0;  // steps collected in this iteration
  std::vector<WorkerMetrics> workers;
};

// Local learner: actor theta_i, critic phi_i, their optimizers and streams.
struct WorkerState {
  ActorParams actor;
  CriticParams critic;
  AdamState actor_opt;
  AdamState critic_opt;
  WorkerStreams streams;

  static WorkerState create(const ActorParams& actor, const CriticParams& critic,
                            WorkerStreams streams);
};

struct InitialParams {
  ActorParams actor;
  CriticParams critic;
};

InitialParams initial_params(const EnvSpec& spec, Rng& init_rng);

// Seed hierarchy: per-seed stream -> init stream / worker k stream / eval stream.
Rng init_stream(const Rng& seed_stream);
Rng worker_stream(const Rng& seed_stream, std::size_t k);
Rng eval_stream(const Rng& seed_stream);

// One iteration of peer-to-peer distillation. All workers must start
// from the same parameters before the first call.
IterationResult p2pdrl_iteration(std::vector<WorkerState>& workers, const EnvSpec& spec,
                                 const Hyperparams& hp, const RandomizationConfig& rand_cfg);

// Single agent fed by K collectors (one domain each).
struct SingleAgentState {
  ActorParams actor;
  CriticParams critic;
  AdamState actor_opt;
  AdamState critic_opt;
  std::vector<WorkerStreams> collectors;

  static SingleAgentState create(const ActorParams& actor, const CriticParams& critic,
                                 std::vector<WorkerStreams> collectors);
};

// PPO on the union of K rollouts of T steps (pooled batch of K*T).
IterationResult vanilla_ppo_iteration(SingleAgentState& agent, const EnvSpec& spec,
                                      const Hyperparams& hp,
                                      const RandomizationConfig& rand_cfg);

// K shadow workers compute PPO gradients on their own data against the shared
// parameters; one Adam step on the mean gradient per minibatch round.
IterationResult distributed_ppo_iteration(SingleAgentState& agent, const EnvSpec& spec,
                                          const Hyperparams& hp,
                                          const RandomizationConfig& rand_cfg);

// Local workers plus one global policy (Distral, DnC).
struct GlobalPolicyState {
  std::vector<WorkerState> locals;
  ActorParams global;
  AdamState global_opt;
  int iterations_done = 0;

  static GlobalPolicyState create(const InitialParams& init,
                                  std::vector<WorkerStreams> streams);
};

// Locals: PPO + alpha * KL(pi_i || pi_0). Global: one supervised step per
// minibatch round on sum_i KL(pi_i || pi_0) over each local's minibatch.
IterationResult distral_iteration(GlobalPolicyState& state, const EnvSpec& spec,
                                  const Hyperparams& hp,
                                  const RandomizationConfig& rand_cfg);

// Locals: PPO + alpha * KL(pi_i || pi_g). Every `distill_period` iterations the
// global policy is fit to the locals on their pooled states, then every local
// actor is reset to it.
IterationResult dnc_iteration(GlobalPolicyState& state, const EnvSpec& spec,
                              const Hyperparams& hp, const RandomizationConfig& rand_cfg,
                              int distill_period);

inline constexpr int kNeverDistill = std::numeric_limits<int>::max();

// log of the mean (over parameters) variance of per-minibatch actor gradients
// of PPO + alpha * distill, evaluated at the current parameters. NaN when
// fewer than two minibatches fit in the batch.
double gradient_variance_log(const ActorParams& actor, const Trajectory& traj,
                             std::span<const ActorParams* const> peers,
                             const Hyperparams& hp, Rng& rng,
                             std::size_t max_minibatches = 64);

}  // namespace p2pdrl

#endif  // P2PDRL_TRAINERS_HPP_
