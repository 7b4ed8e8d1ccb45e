#include "p2pdrl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "p2pdrl/errors.hpp"

namespace p2pdrl {

namespace {

void check_minibatch(const ActorParams& actor, const Minibatch& mb, bool need_advantages) {
  const std::size_t n = mb.size();
  if (n == 0) throw ShapeError("empty minibatch");
  if (mb.states.rows() != n || mb.actions.rows() != n ||
      mb.actions.cols() != actor.action_dim() ||
      (need_advantages && mb.advantages.size() != n)) {
    throw ShapeError("minibatch arrays have inconsistent lengths");
  }
}

// Accumulates the distillation term into d_mean/d_log_std with the given
// scale and returns the unscaled mean KL.
double accumulate_distill(const GaussianBatch& own, std::span<const ActorParams* const> peers,
                          const Tensor& states, double scale, Tensor& d_mean,
                          std::vector<double>& d_log_std) {
  const std::size_t batch = states.rows();
  const std::size_t dim = own.log_std.size();
  const double per_term = 1.0 / (static_cast<double>(batch) * static_cast<double>(peers.size()));
  double total = 0.0;
  for (const ActorParams* peer : peers) {
    const GaussianBatch other = actor_forward(*peer, states);
    for (std::size_t b = 0; b < batch; ++b) {
      const KlPartials kl = kl_partials(own.mean.row(b), own.log_std, other.mean.row(b),
                                        other.log_std);
      total += kl.value;
      for (std::size_t d = 0; d < dim; ++d) {
        d_mean(b, d) += scale * per_term * kl.d_mean_p[d];
        d_log_std[d] += scale * per_term * kl.d_log_std_p[d];
      }
    }
  }
  return total * per_term;
}

}  // namespace

ActorLoss actor_objective(const ActorParams& actor, const Minibatch& mb,
                          std::span<const ActorParams* const> peers,
                          const ActorObjectiveOptions& options) {
  check_minibatch(actor, mb, true);
  const std::size_t batch = mb.size();
  const std::size_t dim = actor.action_dim();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const double lo = 1.0 - options.clip_eps;
  const double hi = 1.0 + options.clip_eps;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

  MlpCache cache;
  const GaussianBatch own = actor_forward(actor, mb.states, &cache);
  std::vector<double> inv_var(dim);
  double log_std_sum = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    inv_var[d] = std::exp(-2.0 * own.log_std[d]);
    log_std_sum += own.log_std[d];
  }

  Tensor d_mean = Tensor::matrix(batch, dim);
  std::vector<double> d_log_std(dim, 0.0);
  ActorLoss out;

  double surrogate = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto mean = own.mean.row(b);
    const auto action = mb.actions.row(b);
    double sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = action[d] - mean[d];
      sq += diff * diff * inv_var[d];
    }
    const double logp = -log_std_sum - static_cast<double>(dim) * half_log_2pi - 0.5 * sq;
    const double ratio = std::exp(logp - mb.old_log_probs[b]);
    if (!std::isfinite(ratio)) {
      throw NumericError("ppo_loss: non-finite probability ratio at sample " +
                         std::to_string(b));
    }
    const double adv = mb.advantages[b];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, lo, hi) * adv;
    surrogate += std::min(unclipped, clipped);
    // The clipped branch is flat in ratio, so only the unclipped one carries
    // gradient.
    if (unclipped <= clipped) {
      const double d_logp = -inv_batch * adv * ratio;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = action[d] - mean[d];
        d_mean(b, d) += d_logp * diff * inv_var[d];
        d_log_std[d] += d_logp * (diff * diff * inv_var[d] - 1.0);
      }
    }
  }
  out.ppo = -surrogate * inv_batch;

  out.entropy = 0.0;
  for (std::size_t d = 0; d < dim; ++d) out.entropy += 0.5 + half_log_2pi + own.log_std[d];
  if (options.entropy_coef != 0.0) {
    for (std::size_t d = 0; d < dim; ++d) d_log_std[d] -= options.entropy_coef;
  }

  if (options.alpha != 0.0 && !peers.empty()) {
    out.distill = accumulate_distill(own, peers, mb.states, options.alpha, d_mean, d_log_std);
  }

  out.grad = actor_backward(actor, cache, d_mean, d_log_std);
  return out;
}

LossAndGrad ppo_loss(const ActorParams& actor, const Minibatch& mb, double clip_eps) {
  ActorLoss l = actor_objective(actor, mb, {}, {clip_eps, 0.0, 0.0});
  return {l.ppo, std::move(l.grad)};
}

LossAndGrad distill_loss(const ActorParams& actor,
                         std::span<const ActorParams* const> peers, const Tensor& states) {
  if (peers.empty()) return {0.0, actor.zeros_like()};
  MlpCache cache;
  const GaussianBatch own = actor_forward(actor, states, &cache);
  Tensor d_mean = Tensor::matrix(states.rows(), actor.action_dim());
  std::vector<double> d_log_std(actor.action_dim(), 0.0);
  const double loss = accumulate_distill(own, peers, states, 1.0, d_mean, d_log_std);
  return {loss, actor_backward(actor, cache, d_mean, d_log_std)};
}

LossAndGrad student_distill_loss(const ActorParams& student,
                                 std::span<const ActorParams* const> teachers,
                                 const Tensor& states) {
  if (teachers.empty()) return {0.0, student.zeros_like()};
  const std::size_t batch = states.rows();
  const std::size_t dim = student.action_dim();
  const double per_state = 1.0 / static_cast<double>(batch);
  MlpCache cache;
  const GaussianBatch own = actor_forward(student, states, &cache);
  Tensor d_mean = Tensor::matrix(batch, dim);
  std::vector<double> d_log_std(dim, 0.0);
  double total = 0.0;
  for (const ActorParams* teacher : teachers) {
    const GaussianBatch t = actor_forward(*teacher, states);
    for (std::size_t b = 0; b < batch; ++b) {
      const KlPartials kl = kl_partials(t.mean.row(b), t.log_std, own.mean.row(b), own.log_std);
      total += kl.value;
      for (std::size_t d = 0; d < dim; ++d) {
        d_mean(b, d) += per_state * kl.d_mean_q[d];
        d_log_std[d] += per_state * kl.d_log_std_q[d];
      }
    }
  }
  return {total * per_state, actor_backward(student, cache, d_mean, d_log_std)};
}

CriticLoss value_loss(const CriticParams& critic, const Minibatch& mb, double clip_range) {
  const std::size_t n = mb.targets.size();
  if (n == 0 || mb.states.rows() != n) throw ShapeError("value_loss: inconsistent minibatch");
  MlpCache cache;
  const Tensor v = mlp_forward(critic.value_net, mb.states, &cache);
  Tensor d_v = Tensor::matrix(n, 1);
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const double diff = v[b] - mb.targets[b];
    if (clip_range > 0.0) {
      const double old = mb.old_values[b];
      const double clipped_v = old + std::clamp(v[b] - old, -clip_range, clip_range);
      const double clipped_diff = clipped_v - mb.targets[b];
      if (clipped_diff * clipped_diff > diff * diff) {
        loss += clipped_diff * clipped_diff;
        const bool inside = std::abs(v[b] - old) < clip_range;
        d_v[b] = inside ? 2.0 * clipped_diff * inv_n : 0.0;
        continue;
      }
    }
    loss += diff * diff;
    d_v[b] = 2.0 * diff * inv_n;
  }
  return {loss * inv_n, {mlp_backward(critic.value_net, cache, d_v).params}};
}

double squared_norm(std::span<const Tensor* const> tensors) {
  double total = 0.0;
  for (const Tensor* t : tensors) {
    for (double v : t->values()) total += v * v;
  }
  return total;
}

}  // namespace p2pdrl
