#include "p2pdrl/trainers.hpp"

#include <cmath>
#include <numeric>

#include "p2pdrl/errors.hpp"

namespace p2pdrl {

namespace {

constexpr std::uint64_t kInitStreamIndex = 0;
constexpr std::uint64_t kEvalStreamIndex = 1;
constexpr std::uint64_t kWorkerStreamBase = 1000;

Trajectory gather_experience(const ActorParams& actor, const CriticParams& critic,
                             WorkerStreams& streams, const EnvSpec& spec,
                             const Hyperparams& hp, const RandomizationConfig& rand_cfg) {
  streams.domain = sample_domain(rand_cfg, streams.domain_rng);
  streams.has_domain = true;
  RolloutOptions options;
  options.resample = hp.resample_per_episode ? &rand_cfg : nullptr;
  options.bootstrap_time_limit = hp.bootstrap_time_limit;
  Trajectory traj = collect_rollout(actor, critic, streams, spec, hp.steps_per_worker, options);
  compute_gae(traj, hp.gamma, hp.gae_lambda);
  return traj;
}

void maybe_normalize(Trajectory& traj, const Hyperparams& hp) {
  if (hp.normalize_advantages) normalize_advantages(traj.advantages);
}

struct LossTotals {
  double ppo = 0.0;
  double distill = 0.0;
  double value = 0.0;
  int actor_steps = 0;
  int critic_steps = 0;

  void fill(WorkerMetrics& m) const {
    if (actor_steps > 0) {
      m.ppo_loss = ppo / actor_steps;
      m.distill_loss = distill / actor_steps;
    }
    if (critic_steps > 0) m.value_loss = value / critic_steps;
  }
};

ActorObjectiveOptions actor_options(const Hyperparams& hp, double alpha) {
  return {hp.clip_eps, alpha, hp.entropy_coef};
}

void apply_actor_grad(ActorParams& actor, AdamState& opt, ActorParams& grad,
                      const Hyperparams& hp) {
  if (hp.max_grad_norm > 0.0) clip_grad_norm(grad, hp.max_grad_norm);
  adam_step(opt, actor, grad, hp.lr);
  actor.clamp();
}

void apply_critic_grad(CriticParams& critic, AdamState& opt, CriticParams& grad,
                       const Hyperparams& hp) {
  if (hp.max_grad_norm > 0.0) clip_grad_norm(grad, hp.max_grad_norm);
  adam_step(opt, critic, grad, hp.lr);
}

void actor_step(ActorParams& actor, AdamState& opt, const Minibatch& mb,
                std::span<const ActorParams* const> peers, double alpha,
                const Hyperparams& hp, LossTotals& totals) {
  ActorLoss loss = actor_objective(actor, mb, peers, actor_options(hp, alpha));
  apply_actor_grad(actor, opt, loss.grad, hp);
  totals.ppo += loss.ppo;
  totals.distill += loss.distill;
  totals.actor_steps += 1;
}

void critic_step(CriticParams& critic, AdamState& opt, const Minibatch& mb,
                 const Hyperparams& hp, LossTotals& totals) {
  CriticLoss loss = value_loss(critic, mb, hp.value_clip);
  apply_critic_grad(critic, opt, loss.grad, hp);
  totals.value += loss.loss;
  totals.critic_steps += 1;
}

template <class Params>
void add_into(Params& acc, const Params& g) {
  auto a = acc.tensors();
  const auto b = g.tensors();
  for (std::size_t k = 0; k < a.size(); ++k) {
    double* x = a[k]->data();
    const double* y = b[k]->data();
    for (std::size_t i = 0; i < a[k]->size(); ++i) x[i] += y[i];
  }
}

template <class Params>
void scale(Params& p, double s) {
  for (Tensor* t : p.tensors()) {
    for (double& v : t->values()) v *= s;
  }
}

std::vector<const ActorParams*> peers_of(const std::vector<WorkerState>& workers,
                                         const std::vector<ActorParams>* snapshot,
                                         std::size_t i) {
  std::vector<const ActorParams*> out;
  for (std::size_t k = 0; k < workers.size(); ++k) {
    if (k == i) continue;
    out.push_back(snapshot ? &(*snapshot)[k] : &workers[k].actor);
  }
  return out;
}

// Per-worker minibatch schedule for one epoch.
struct EpochPlan {
  std::vector<std::size_t> order;
  std::vector<std::span<const std::size_t>> batches;
};

EpochPlan plan_epoch(Rng& rng, std::size_t n, int minibatch) {
  EpochPlan plan;
  plan.order = rng.permutation(n);
  plan.batches = split_minibatches(plan.order, static_cast<std::size_t>(minibatch));
  return plan;
}

std::int64_t total_steps(const std::vector<Trajectory>& trajs) {
  std::int64_t n = 0;
  for (const auto& t : trajs) n += static_cast<std::int64_t>(t.size());
  return n;
}

void check_iteration_inputs(const Hyperparams& hp, const RandomizationConfig& rand_cfg,
                            std::size_t workers) {
  hp.validate();
  rand_cfg.validate();
  if (workers == 0) throw ConfigError("workers", "need at least one worker");
}

// Shared local-update loop for P2PDRL (peers = other workers) and for
// Distral/DnC (peer = the global policy). `after_round` runs once per
// minibatch round with each worker's minibatch.
template <class PeerFn, class RoundFn>
std::vector<LossTotals> local_updates(std::vector<WorkerState>& workers,
                                      const std::vector<Trajectory>& trajs,
                                      const Hyperparams& hp, PeerFn peers_for,
                                      RoundFn after_round) {
  const std::size_t k_workers = workers.size();
  std::vector<LossTotals> totals(k_workers);
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::vector<EpochPlan> plans;
    plans.reserve(k_workers);
    for (std::size_t i = 0; i < k_workers; ++i) {
      plans.push_back(plan_epoch(workers[i].streams.minibatch_rng, trajs[i].size(), hp.minibatch));
    }
    std::vector<ActorParams> snapshot;
    if (hp.snapshot_per_epoch) {
      for (const auto& w : workers) snapshot.push_back(w.actor);
    }
    const std::size_t rounds = plans.front().batches.size();
    std::vector<Minibatch> round_batches(k_workers);
    for (std::size_t m = 0; m < rounds; ++m) {
      for (std::size_t i = 0; i < k_workers; ++i) {
        round_batches[i] = gather(trajs[i], plans[i].batches[m]);
        const auto peers = peers_for(i, hp.snapshot_per_epoch ? &snapshot : nullptr);
        auto& w = workers[i];
        actor_step(w.actor, w.actor_opt, round_batches[i], peers, hp.alpha, hp, totals[i]);
        critic_step(w.critic, w.critic_opt, round_batches[i], hp, totals[i]);
      }
      after_round(round_batches);
    }
  }
  return totals;
}

IterationResult local_metrics(const std::vector<Trajectory>& trajs,
                              const std::vector<LossTotals>& totals,
                              const std::vector<double>& grad_var) {
  IterationResult result;
  result.env_steps = total_steps(trajs);
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    WorkerMetrics m;
    m.worker_id = static_cast<int>(i);
    m.mean_episode_return = trajs[i].mean_episode_return();
    totals[i].fill(m);
    m.grad_variance_log = grad_var[i];
    result.workers.push_back(m);
  }
  return result;
}

std::vector<Trajectory> collect_locals(std::vector<WorkerState>& workers, const EnvSpec& spec,
                                       const Hyperparams& hp,
                                       const RandomizationConfig& rand_cfg) {
  std::vector<Trajectory> trajs;
  trajs.reserve(workers.size());
  for (std::size_t i = 0; i < workers.size(); ++i) {
    auto& w = workers[i];
    trajs.push_back(gather_experience(w.actor, w.critic, w.streams, spec, hp,
                                      rand_cfg.for_worker(i)));
    maybe_normalize(trajs.back(), hp);
  }
  return trajs;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

void Hyperparams::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "must lie in (0, 1]");
  if (!(gae_lambda > 0.0 && gae_lambda <= 1.0)) {
    throw ConfigError("gae_lambda", "must lie in (0, 1]");
  }
  if (!(clip_eps > 0.0)) throw ConfigError("clip_eps", "must be positive");
  if (!(alpha >= 0.0)) throw ConfigError("alpha", "must be non-negative");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr", "must be a finite value >= 0");
  if (workers < 1) throw ConfigError("workers", "must be >= 1");
  if (steps_per_worker < 1) throw ConfigError("steps_per_worker", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (minibatch < 1) throw ConfigError("minibatch", "must be >= 1");
  if (dnc_period < 1) throw ConfigError("dnc_period", "must be >= 1");
  if (!(entropy_coef >= 0.0)) throw ConfigError("entropy_coef", "must be non-negative");
  if (!(value_clip >= 0.0)) throw ConfigError("value_clip", "must be non-negative");
  if (!(max_grad_norm >= 0.0)) throw ConfigError("max_grad_norm", "must be non-negative");
}

WorkerState WorkerState::create(const ActorParams& actor, const CriticParams& critic,
                                WorkerStreams streams) {
  return {actor, critic, AdamState::for_params(actor), AdamState::for_params(critic),
          std::move(streams)};
}

SingleAgentState SingleAgentState::create(const ActorParams& actor,
                                          const CriticParams& critic,
                                          std::vector<WorkerStreams> collectors) {
  return {actor, critic, AdamState::for_params(actor), AdamState::for_params(critic),
          std::move(collectors)};
}

GlobalPolicyState GlobalPolicyState::create(const InitialParams& init,
                                            std::vector<WorkerStreams> streams) {
  GlobalPolicyState s;
  for (auto& st : streams) s.locals.push_back(WorkerState::create(init.actor, init.critic, st));
  s.global = init.actor;
  s.global_opt = AdamState::for_params(init.actor);
  return s;
}

InitialParams initial_params(const EnvSpec& spec, Rng& init_rng) {
  ActorParams actor = ActorParams::init(spec.obs_dim, spec.action_dim, init_rng);
  CriticParams critic = CriticParams::init(spec.obs_dim, init_rng);
  return {std::move(actor), std::move(critic)};
}

Rng init_stream(const Rng& seed_stream) { return seed_stream.child(kInitStreamIndex); }
Rng eval_stream(const Rng& seed_stream) { return seed_stream.child(kEvalStreamIndex); }
Rng worker_stream(const Rng& seed_stream, std::size_t k) {
  return seed_stream.child(kWorkerStreamBase + k);
}

double gradient_variance_log(const ActorParams& actor, const Trajectory& traj,
                             std::span<const ActorParams* const> peers,
                             const Hyperparams& hp, Rng& rng,
                             std::size_t max_minibatches) {
  const auto mb_size = static_cast<std::size_t>(hp.minibatch);
  const std::size_t count = std::min(max_minibatches, traj.size() / mb_size);
  if (count < 2) return nan();
  const std::vector<std::size_t> order = rng.permutation(traj.size());

  std::vector<double> mean, m2;
  for (std::size_t j = 0; j < count; ++j) {
    const std::span<const std::size_t> idx(order.data() + j * mb_size, mb_size);
    const ActorLoss loss =
        actor_objective(actor, gather(traj, idx), peers, {hp.clip_eps, hp.alpha, 0.0});
    std::vector<double> flat;
    for (const Tensor* t : loss.grad.tensors()) {
      flat.insert(flat.end(), t->values().begin(), t->values().end());
    }
    if (mean.empty()) {
      mean.assign(flat.size(), 0.0);
      m2.assign(flat.size(), 0.0);
    }
    const double n = static_cast<double>(j + 1);
    for (std::size_t p = 0; p < flat.size(); ++p) {
      const double delta = flat[p] - mean[p];
      mean[p] += delta / n;
      m2[p] += delta * (flat[p] - mean[p]);
    }
  }
  const double denom = static_cast<double>(count - 1);
  double avg = 0.0;
  for (double v : m2) avg += v / denom;
  avg /= static_cast<double>(m2.size());
  return std::log(avg);
}

IterationResult p2pdrl_iteration(std::vector<WorkerState>& workers, const EnvSpec& spec,
                                 const Hyperparams& hp, const RandomizationConfig& rand_cfg) {
  check_iteration_inputs(hp, rand_cfg, workers.size());
  std::vector<Trajectory> trajs = collect_locals(workers, spec, hp, rand_cfg);

  std::vector<double> grad_var(workers.size(), nan());
  if (hp.log_grad_variance) {
    for (std::size_t i = 0; i < workers.size(); ++i) {
      const auto peers = peers_of(workers, nullptr, i);
      grad_var[i] = gradient_variance_log(workers[i].actor, trajs[i], peers, hp,
                                          workers[i].streams.diagnostic_rng);
    }
  }

  auto peers_for = [&workers](std::size_t i, const std::vector<ActorParams>* snapshot) {
    return peers_of(workers, snapshot, i);
  };
  const auto totals =
      local_updates(workers, trajs, hp, peers_for, [](const std::vector<Minibatch>&) {});
  return local_metrics(trajs, totals, grad_var);
}

IterationResult vanilla_ppo_iteration(SingleAgentState& agent, const EnvSpec& spec,
                                      const Hyperparams& hp,
                                      const RandomizationConfig& rand_cfg) {
  check_iteration_inputs(hp, rand_cfg, agent.collectors.size());
  std::vector<Trajectory> trajs;
  for (std::size_t k = 0; k < agent.collectors.size(); ++k) {
    trajs.push_back(gather_experience(agent.actor, agent.critic, agent.collectors[k], spec,
                                      hp, rand_cfg.for_worker(k)));
  }
  Trajectory pooled = concatenate(trajs);
  maybe_normalize(pooled, hp);

  WorkerMetrics m;
  m.worker_id = 0;
  m.mean_episode_return = pooled.mean_episode_return();
  m.grad_variance_log =
      hp.log_grad_variance
          ? gradient_variance_log(agent.actor, pooled, {}, hp, agent.collectors[0].diagnostic_rng)
          : nan();

  LossTotals totals;
  Rng& shuffle_rng = agent.collectors[0].minibatch_rng;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const EpochPlan plan = plan_epoch(shuffle_rng, pooled.size(), hp.minibatch);
    for (const auto& idx : plan.batches) {
      const Minibatch mb = gather(pooled, idx);
      actor_step(agent.actor, agent.actor_opt, mb, {}, 0.0, hp, totals);
      critic_step(agent.critic, agent.critic_opt, mb, hp, totals);
    }
  }
  totals.fill(m);
  return {total_steps(trajs), {m}};
}

IterationResult distributed_ppo_iteration(SingleAgentState& agent, const EnvSpec& spec,
                                          const Hyperparams& hp,
                                          const RandomizationConfig& rand_cfg) {
  const std::size_t k_workers = agent.collectors.size();
  check_iteration_inputs(hp, rand_cfg, k_workers);
  std::vector<Trajectory> trajs;
  for (std::size_t k = 0; k < k_workers; ++k) {
    trajs.push_back(gather_experience(agent.actor, agent.critic, agent.collectors[k], spec,
                                      hp, rand_cfg.for_worker(k)));
    maybe_normalize(trajs.back(), hp);
  }
  const Trajectory pooled = concatenate(trajs);

  WorkerMetrics m;
  m.worker_id = 0;
  m.mean_episode_return = pooled.mean_episode_return();
  m.grad_variance_log =
      hp.log_grad_variance
          ? gradient_variance_log(agent.actor, pooled, {}, hp, agent.collectors[0].diagnostic_rng)
          : nan();

  LossTotals totals;
  const double inv_k = 1.0 / static_cast<double>(k_workers);
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::vector<EpochPlan> plans;
    for (std::size_t k = 0; k < k_workers; ++k) {
      plans.push_back(plan_epoch(agent.collectors[k].minibatch_rng, trajs[k].size(), hp.minibatch));
    }
    for (std::size_t r = 0; r < plans.front().batches.size(); ++r) {
      std::vector<Minibatch> mbs;
      for (std::size_t k = 0; k < k_workers; ++k) mbs.push_back(gather(trajs[k], plans[k].batches[r]));

      ActorParams actor_grad;
      double ppo = 0.0;
      for (std::size_t k = 0; k < k_workers; ++k) {
        ActorLoss loss = actor_objective(agent.actor, mbs[k], {}, actor_options(hp, 0.0));
        ppo += loss.ppo;
        if (k == 0) actor_grad = std::move(loss.grad);
        else add_into(actor_grad, loss.grad);
      }
      if (k_workers > 1) scale(actor_grad, inv_k);
      apply_actor_grad(agent.actor, agent.actor_opt, actor_grad, hp);

      CriticParams critic_grad;
      double vloss = 0.0;
      for (std::size_t k = 0; k < k_workers; ++k) {
        CriticLoss loss = value_loss(agent.critic, mbs[k], hp.value_clip);
        vloss += loss.loss;
        if (k == 0) critic_grad = std::move(loss.grad);
        else add_into(critic_grad, loss.grad);
      }
      if (k_workers > 1) scale(critic_grad, inv_k);
      apply_critic_grad(agent.critic, agent.critic_opt, critic_grad, hp);

      totals.ppo += ppo * inv_k;
      totals.value += vloss * inv_k;
      totals.actor_steps += 1;
      totals.critic_steps += 1;
    }
  }
  totals.fill(m);
  return {total_steps(trajs), {m}};
}

namespace {

std::vector<double> local_grad_variance(const GlobalPolicyState& state,
                                        std::vector<WorkerState>& locals,
                                        const std::vector<Trajectory>& trajs,
                                        const Hyperparams& hp) {
  std::vector<double> out(locals.size(), nan());
  if (!hp.log_grad_variance) return out;
  const ActorParams* global = &state.global;
  for (std::size_t i = 0; i < locals.size(); ++i) {
    out[i] = gradient_variance_log(locals[i].actor, trajs[i], std::span(&global, 1), hp,
                                   locals[i].streams.diagnostic_rng);
  }
  return out;
}

}  // namespace

IterationResult distral_iteration(GlobalPolicyState& state, const EnvSpec& spec,
                                  const Hyperparams& hp,
                                  const RandomizationConfig& rand_cfg) {
  check_iteration_inputs(hp, rand_cfg, state.locals.size());
  std::vector<Trajectory> trajs = collect_locals(state.locals, spec, hp, rand_cfg);
  const auto grad_var = local_grad_variance(state, state.locals, trajs, hp);

  const ActorParams* global = &state.global;
  auto peers_for = [global](std::size_t, const std::vector<ActorParams>*) {
    return std::vector<const ActorParams*>{global};
  };
  auto global_step = [&state, &hp](const std::vector<Minibatch>& mbs) {
    ActorParams grad = state.global.zeros_like();
    for (std::size_t i = 0; i < mbs.size(); ++i) {
      const ActorParams* teacher = &state.locals[i].actor;
      add_into(grad, student_distill_loss(state.global, std::span(&teacher, 1), mbs[i].states).grad);
    }
    apply_actor_grad(state.global, state.global_opt, grad, hp);
  };
  const auto totals = local_updates(state.locals, trajs, hp, peers_for, global_step);
  state.iterations_done += 1;
  return local_metrics(trajs, totals, grad_var);
}

IterationResult dnc_iteration(GlobalPolicyState& state, const EnvSpec& spec,
                              const Hyperparams& hp, const RandomizationConfig& rand_cfg,
                              int distill_period) {
  if (distill_period <= 0) throw ConfigError("dnc_period", "must be >= 1");
  check_iteration_inputs(hp, rand_cfg, state.locals.size());
  std::vector<Trajectory> trajs = collect_locals(state.locals, spec, hp, rand_cfg);
  const auto grad_var = local_grad_variance(state, state.locals, trajs, hp);

  const ActorParams* global = &state.global;
  auto peers_for = [global](std::size_t, const std::vector<ActorParams>*) {
    return std::vector<const ActorParams*>{global};
  };
  const auto totals =
      local_updates(state.locals, trajs, hp, peers_for, [](const std::vector<Minibatch>&) {});
  state.iterations_done += 1;

  if (state.iterations_done % distill_period == 0) {
    std::vector<const ActorParams*> teachers;
    for (const auto& w : state.locals) teachers.push_back(&w.actor);
    const Trajectory pooled = concatenate(trajs);
    Rng& rng = state.locals.front().streams.minibatch_rng;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
      const EpochPlan plan = plan_epoch(rng, pooled.size(), hp.minibatch);
      for (const auto& idx : plan.batches) {
        LossAndGrad l =
            student_distill_loss(state.global, teachers, gather_rows(pooled.observations, idx));
        apply_actor_grad(state.global, state.global_opt, l.grad, hp);
      }
    }
    for (auto& w : state.locals) {
      w.actor = state.global;
      w.actor_opt = AdamState::for_params(w.actor);
    }
  }
  return local_metrics(trajs, totals, grad_var);
}

}  // namespace p2pdrl
