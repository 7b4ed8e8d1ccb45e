#include "p2pdrl/rollout.hpp"

#include <cmath>
#include <numeric>

#include "p2pdrl/errors.hpp"

namespace p2pdrl {

WorkerStreams WorkerStreams::from(const Rng& worker_stream) {
  return {worker_stream.child(1), worker_stream.child(2), worker_stream.child(3),
          worker_stream.child(4), worker_stream.child(5), DomainParams{}, false};
}

double Trajectory::mean_episode_return() const {
  if (episode_returns.empty()) return unfinished_return;
  return std::accumulate(episode_returns.begin(), episode_returns.end(), 0.0) /
         static_cast<double>(episode_returns.size());
}

Trajectory collect_rollout(const ActorParams& actor, const CriticParams& critic,
                           WorkerStreams& streams, const EnvSpec& spec, int steps,
                           const RolloutOptions& options) {
  if (steps < 1) throw ConfigError("steps_per_worker", "rollout length must be >= 1");
  if (!streams.has_domain) throw StateError("collect_rollout: worker has no sampled domain");
  if (actor.obs_dim() != spec.obs_dim || actor.action_dim() != spec.action_dim) {
    throw ShapeError("collect_rollout: actor dims do not match task " + spec.name);
  }

  const auto n = static_cast<std::size_t>(steps);
  Trajectory traj;
  traj.observations = Tensor::matrix(n, spec.obs_dim);
  traj.actions = Tensor::matrix(n, spec.action_dim);
  traj.env_states = Tensor::matrix(n, spec.state_dim);
  traj.domains.reserve(n);
  traj.rewards.reserve(n);
  traj.dones.reserve(n);
  traj.log_probs.reserve(n);

  std::vector<std::size_t> timeout_steps;
  std::vector<double> timeout_rows;

  EnvState state = env_reset(spec, streams.domain, streams.env_rng);
  double episode_return = 0.0;
  int episode_steps = 0;

  for (std::size_t t = 0; t < n; ++t) {
    const std::vector<double> obs = observe(spec, state);
    std::copy(obs.begin(), obs.end(), traj.observations.row(t).begin());
    std::copy(state.begin(), state.end(), traj.env_states.row(t).begin());
    traj.domains.push_back(streams.domain);

    const GaussianDist dist = policy_distribution(actor, obs);
    const std::vector<double> action = sample_action(dist, streams.policy_rng);
    std::copy(action.begin(), action.end(), traj.actions.row(t).begin());
    traj.log_probs.push_back(log_prob(dist, action));

    StepResult step = env_step(spec, streams.domain, state, action);
    episode_return += step.reward;
    ++episode_steps;
    const bool done = step.done || episode_steps >= spec.max_episode_steps;
    traj.rewards.push_back(step.reward);
    traj.dones.push_back(done ? 1 : 0);

    if (done) {
      if (options.bootstrap_time_limit && !step.done) {
        timeout_steps.push_back(t);
        const std::vector<double> last = observe(spec, step.next_state);
        timeout_rows.insert(timeout_rows.end(), last.begin(), last.end());
      }
      traj.episode_returns.push_back(episode_return);
      episode_return = 0.0;
      episode_steps = 0;
      if (options.resample) {
        streams.domain = sample_domain(*options.resample, streams.domain_rng);
      }
      state = env_reset(spec, streams.domain, streams.env_rng);
    } else {
      state = std::move(step.next_state);
    }
  }
  traj.unfinished_return = episode_return;

  traj.values = values(critic, traj.observations);
  traj.timeout_values.assign(n, 0.0);
  if (!timeout_steps.empty()) {
    const Tensor last({timeout_steps.size(), spec.obs_dim}, std::move(timeout_rows));
    const std::vector<double> v = values(critic, last);
    for (std::size_t j = 0; j < timeout_steps.size(); ++j) traj.timeout_values[timeout_steps[j]] = v[j];
  }
  traj.bootstrap_value = traj.dones.back() ? 0.0 : value(critic, observe(spec, state));
  return traj;
}

void compute_gae(Trajectory& traj, double gamma, double lambda) {
  const std::size_t n = traj.size();
  if (traj.values.size() != n) throw StateError("compute_gae: values missing");
  traj.advantages.assign(n, 0.0);
  traj.targets.assign(n, 0.0);
  double next_advantage = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double not_done = traj.dones[t] ? 0.0 : 1.0;
    double next_value = (t + 1 == n) ? traj.bootstrap_value : traj.values[t + 1];
    if (traj.dones[t]) next_value = traj.timeout_values.size() == n ? traj.timeout_values[t] : 0.0;
    const double delta = traj.rewards[t] + gamma * next_value - traj.values[t];
    next_advantage = delta + gamma * lambda * not_done * next_advantage;
    traj.advantages[t] = next_advantage;
    traj.targets[t] = next_advantage + traj.values[t];
  }
}

void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / n);
  for (double& a : advantages) a = (a - mean) / (std + 1e-8);
}

namespace {

Tensor stack_rows(std::span<const Trajectory> parts, Tensor Trajectory::*field) {
  std::size_t rows = 0;
  for (const auto& p : parts) rows += (p.*field).rows();
  const std::size_t cols = (parts.front().*field).cols();
  Tensor out = Tensor::matrix(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const Tensor& t = p.*field;
    std::copy(t.values().begin(), t.values().end(), out.data() + offset);
    offset += t.size();
  }
  return out;
}

template <class T>
void append(std::vector<T>& dst, const std::vector<T>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

Trajectory concatenate(std::span<const Trajectory> parts) {
  if (parts.empty()) throw StateError("concatenate: no trajectories");
  Trajectory out;
  out.observations = stack_rows(parts, &Trajectory::observations);
  out.actions = stack_rows(parts, &Trajectory::actions);
  out.env_states = stack_rows(parts, &Trajectory::env_states);
  for (const auto& p : parts) {
    append(out.domains, p.domains);
    append(out.rewards, p.rewards);
    append(out.dones, p.dones);
    if (p.timeout_values.size() == p.size()) {
      append(out.timeout_values, p.timeout_values);
    } else {
      out.timeout_values.resize(out.timeout_values.size() + p.size(), 0.0);
    }
    append(out.values, p.values);
    append(out.log_probs, p.log_probs);
    append(out.advantages, p.advantages);
    append(out.targets, p.targets);
    append(out.episode_returns, p.episode_returns);
  }
  out.bootstrap_value = parts.back().bootstrap_value;
  if (out.episode_returns.empty()) {
    double sum = 0.0;
    for (const auto& p : parts) sum += p.unfinished_return;
    out.unfinished_return = sum / static_cast<double>(parts.size());
  }
  return out;
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> indices) {
  const std::size_t cols = t.cols();
  Tensor out = Tensor::matrix(indices.size(), cols);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = t.row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Minibatch gather(const Trajectory& traj, std::span<const std::size_t> indices) {
  Minibatch mb;
  mb.states = gather_rows(traj.observations, indices);
  mb.actions = gather_rows(traj.actions, indices);
  const bool with_adv = traj.has_advantages();
  for (std::size_t i : indices) {
    mb.old_log_probs.push_back(traj.log_probs[i]);
    mb.old_values.push_back(traj.values[i]);
    if (with_adv) {
      mb.advantages.push_back(traj.advantages[i]);
      mb.targets.push_back(traj.targets[i]);
    }
  }
  return mb;
}

std::vector<std::span<const std::size_t>> split_minibatches(
    std::span<const std::size_t> order, std::size_t size) {
  if (size == 0) throw ConfigError("minibatch", "must be positive");
  std::vector<std::span<const std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += size) {
    out.push_back(order.subspan(start, std::min(size, order.size() - start)));
  }
  return out;
}

}  // namespace p2pdrl
