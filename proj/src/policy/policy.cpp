#include "p2pdrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "p2pdrl/errors.hpp"

namespace p2pdrl {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_width(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": width " + std::to_string(got) +
                     ", expected " + std::to_string(want));
  }
}

Tensor single_row(std::span<const double> state) {
  return Tensor({1, state.size()}, std::vector<double>(state.begin(), state.end()));
}

}  // namespace

double clamp_log_std(double log_std) {
  return std::clamp(log_std, kLogStdMin, kLogStdMax);
}

ActorParams ActorParams::init(std::size_t obs_dim, std::size_t action_dim, Rng& rng) {
  return {MlpParams::uniform_init(MlpParams::default_dims(obs_dim, action_dim), rng),
          Tensor::vector(action_dim, 0.0)};
}

ActorParams ActorParams::zeros(std::size_t obs_dim, std::size_t action_dim) {
  return {MlpParams::zeros(MlpParams::default_dims(obs_dim, action_dim)),
          Tensor::vector(action_dim, 0.0)};
}

ActorParams ActorParams::zeros_like() const {
  return {mean_net.zeros_like(), Tensor(log_std.shape())};
}

void ActorParams::clamp() {
  for (double& v : log_std.values()) v = clamp_log_std(v);
}

std::vector<Tensor*> ActorParams::tensors() {
  auto out = mean_net.tensors();
  out.push_back(&log_std);
  return out;
}

std::vector<const Tensor*> ActorParams::tensors() const {
  auto out = mean_net.tensors();
  out.push_back(&log_std);
  return out;
}

std::vector<std::string> ActorParams::tensor_names() const {
  auto out = mean_net.tensor_names();
  for (auto& n : out) n = "mean_net." + n;
  out.push_back("log_std");
  return out;
}

CriticParams CriticParams::init(std::size_t obs_dim, Rng& rng) {
  return {MlpParams::uniform_init(MlpParams::default_dims(obs_dim, 1), rng)};
}

GaussianBatch actor_forward(const ActorParams& actor, const Tensor& states,
                            MlpCache* cache) {
  if (actor.mean_net.output_dim() != actor.action_dim()) {
    throw ShapeError("actor: mean net output does not match log_std size");
  }
  GaussianBatch out{mlp_forward(actor.mean_net, states, cache), {}};
  out.log_std.reserve(actor.action_dim());
  for (double v : actor.log_std.values()) out.log_std.push_back(clamp_log_std(v));
  return out;
}

ActorParams actor_backward(const ActorParams& actor, const MlpCache& cache,
                           const Tensor& d_mean, std::span<const double> d_log_std) {
  require_width(d_log_std.size(), actor.action_dim(), "actor_backward d_log_std");
  ActorParams grad{mlp_backward(actor.mean_net, cache, d_mean).params,
                   Tensor::vector(actor.action_dim())};
  for (std::size_t d = 0; d < actor.action_dim(); ++d) {
    const double raw = actor.log_std[d];
    grad.log_std[d] = (raw < kLogStdMin || raw > kLogStdMax) ? 0.0 : d_log_std[d];
  }
  return grad;
}

GaussianDist policy_distribution(const ActorParams& actor, std::span<const double> state) {
  require_width(state.size(), actor.obs_dim(), "policy_distribution state");
  const GaussianBatch batch = actor_forward(actor, single_row(state));
  GaussianDist dist;
  dist.mean.assign(batch.mean.values().begin(), batch.mean.values().end());
  for (double ls : batch.log_std) dist.std.push_back(std::exp(ls));
  return dist;
}

double log_prob(const GaussianDist& dist, std::span<const double> action) {
  require_width(action.size(), dist.dim(), "log_prob action");
  double total = 0.0;
  for (std::size_t d = 0; d < dist.dim(); ++d) {
    const double z = (action[d] - dist.mean[d]) / dist.std[d];
    total += -std::log(dist.std[d]) - kHalfLog2Pi - 0.5 * z * z;
  }
  return total;
}

double kl_divergence(const GaussianDist& p, const GaussianDist& q) {
  require_width(q.dim(), p.dim(), "kl_divergence");
  double total = 0.0;
  for (std::size_t d = 0; d < p.dim(); ++d) {
    const double diff = p.mean[d] - q.mean[d];
    const double var_q = q.std[d] * q.std[d];
    total += std::log(q.std[d] / p.std[d]) +
             (p.std[d] * p.std[d] + diff * diff) / (2.0 * var_q) - 0.5;
  }
  return total;
}

KlPartials kl_partials(std::span<const double> mean_p, std::span<const double> log_std_p,
                       std::span<const double> mean_q, std::span<const double> log_std_q) {
  const std::size_t n = mean_p.size();
  require_width(mean_q.size(), n, "kl_partials mean_q");
  require_width(log_std_p.size(), n, "kl_partials log_std_p");
  require_width(log_std_q.size(), n, "kl_partials log_std_q");
  KlPartials out;
  out.d_mean_p.resize(n);
  out.d_log_std_p.resize(n);
  out.d_mean_q.resize(n);
  out.d_log_std_q.resize(n);
  for (std::size_t d = 0; d < n; ++d) {
    const double diff = mean_p[d] - mean_q[d];
    // Ratio taken from the log difference so p == q yields exactly 1.
    const double var_ratio = std::exp(2.0 * (log_std_p[d] - log_std_q[d]));
    const double inv_var_q = std::exp(-2.0 * log_std_q[d]);
    const double spread = var_ratio + diff * diff * inv_var_q;
    out.value += log_std_q[d] - log_std_p[d] + 0.5 * spread - 0.5;
    out.d_mean_p[d] = diff * inv_var_q;
    out.d_mean_q[d] = -diff * inv_var_q;
    out.d_log_std_p[d] = var_ratio - 1.0;
    out.d_log_std_q[d] = 1.0 - spread;
  }
  return out;
}

std::vector<double> sample_action(const GaussianDist& dist, Rng& rng) {
  std::vector<double> action(dist.dim());
  for (std::size_t d = 0; d < dist.dim(); ++d) {
    action[d] = dist.mean[d] + dist.std[d] * rng.standard_normal();
  }
  return action;
}

double entropy(const GaussianDist& dist) {
  double total = 0.0;
  for (double s : dist.std) total += 0.5 + kHalfLog2Pi + std::log(s);
  return total;
}

double value(const CriticParams& critic, std::span<const double> state) {
  require_width(state.size(), critic.value_net.input_dim(), "value state");
  return mlp_forward(critic.value_net, single_row(state))[0];
}

std::vector<double> values(const CriticParams& critic, const Tensor& states) {
  const Tensor out = mlp_forward(critic.value_net, states);
  return {out.values().begin(), out.values().end()};
}

void add_actor(Checkpoint& ckpt, const std::string& section, const ActorParams& actor) {
  add_mlp(ckpt, section + "/mean_net", actor.mean_net);
  ckpt.add(section + "/log_std", actor.log_std);
}

ActorParams read_actor(const Checkpoint& ckpt, const std::string& section) {
  ActorParams actor{read_mlp(ckpt, section + "/mean_net"), ckpt.get(section + "/log_std")};
  if (actor.log_std.rank() != 1 || actor.log_std.size() != actor.mean_net.output_dim()) {
    throw ShapeError("checkpoint section " + section + ": log_std does not match mean net");
  }
  return actor;
}

void add_critic(Checkpoint& ckpt, const std::string& section, const CriticParams& critic) {
  add_mlp(ckpt, section + "/value_net", critic.value_net);
}

CriticParams read_critic(const Checkpoint& ckpt, const std::string& section) {
  CriticParams critic{read_mlp(ckpt, section + "/value_net")};
  if (critic.value_net.output_dim() != 1) {
    throw ShapeError("checkpoint section " + section + ": critic output must be scalar");
  }
  return critic;
}

}  // namespace p2pdrl
