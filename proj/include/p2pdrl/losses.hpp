#ifndef P2PDRL_LOSSES_HPP_
#define P2PDRL_LOSSES_HPP_

#include <span>

#include "p2pdrl/policy.hpp"
#include "p2pdrl/rollout.hpp"

namespace p2pdrl {

struct ActorLoss {
  double ppo = 0.0;      // negated clipped surrogate
  double distill = 0.0;  // mean KL to peers (before alpha)
  double entropy = 0.0;  // mean policy entropy (diagnostic)
  ActorParams grad;      // gradient of ppo + alpha * distill - entropy_coef * entropy
};

struct ActorObjectiveOptions {
  double clip_eps = 0.2;
  double alpha = 0.0;
  double entropy_coef = 0.0;
};

// Clipped-surrogate PPO loss plus alpha times the peer distillation loss,
// evaluated on one minibatch. Peers are constants: gradients flow only into
// `actor`. With alpha == 0 or no peers the distillation term is skipped
// entirely, so the result is bit-identical to plain PPO.
ActorLoss actor_objective(const ActorParams& actor, const Minibatch& mb,
                          std::span<const ActorParams* const> peers,
                          const ActorObjectiveOptions& options);

// loss = -mean_t min(r_t A_t, clip(r_t, 1 - eps, 1 + eps) A_t).
// Throws NumericError naming the sample if a ratio is not finite.
struct LossAndGrad {
  double loss = 0.0;
  ActorParams grad;
};
LossAndGrad ppo_loss(const ActorParams& actor, const Minibatch& mb, double clip_eps);

// 1/(K-1) sum_k mean_s KL(pi_actor(.|s) || pi_peer_k(.|s)) over `states`.
// No peers: loss 0, zero gradient.
LossAndGrad distill_loss(const ActorParams& actor,
                         std::span<const ActorParams* const> peers, const Tensor& states);

// sum_k mean_s KL(pi_teacher_k(.|s) || pi_student(.|s)); gradient w.r.t. the
// student. Used to fit the global policy in Distral and DnC.
LossAndGrad student_distill_loss(const ActorParams& student,
                                 std::span<const ActorParams* const> teachers,
                                 const Tensor& states);

struct CriticLoss {
  double loss = 0.0;
  CriticParams grad;
};

// mean (V(s) - V_targ)^2. With clip_range > 0 the value prediction is also
// clipped around the collection-time estimate and the max of both errors is
// used.
CriticLoss value_loss(const CriticParams& critic, const Minibatch& mb,
                      double clip_range = 0.0);

// Scales gradients so their global L2 norm is at most max_norm. Returns the
// norm before scaling.
template <class Params>
double clip_grad_norm(Params& grads, double max_norm);

double squared_norm(std::span<const Tensor* const> tensors);

template <class Params>
double clip_grad_norm(Params& grads, double max_norm) {
  auto ts = grads.tensors();
  std::vector<const Tensor*> cts(ts.begin(), ts.end());
  const double norm = std::sqrt(squared_norm(cts));
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor* t : ts) {
      for (double& v : t->values()) v *= scale;
    }
  }
  return norm;
}

}  // namespace p2pdrl

#endif  // P2PDRL_LOSSES_HPP_
