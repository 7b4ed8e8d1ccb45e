#ifndef P2PDRL_POLICY_HPP_
#define P2PDRL_POLICY_HPP_

#include <span>
#include <string>
#include <vector>

#include "p2pdrl/checkpoint.hpp"
#include "p2pdrl/mlp.hpp"
#include "p2pdrl/rng.hpp"
#include "p2pdrl/tensor.hpp"

namespace p2pdrl {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

double clamp_log_std(double log_std);

// Gaussian policy with a state-dependent mean and a learnable,
// state-independent log standard deviation.
struct ActorParams {
  MlpParams mean_net;  // obs_dim -> action_dim
  Tensor log_std;      // action_dim

  static ActorParams init(std::size_t obs_dim, std::size_t action_dim, Rng& rng);
  static ActorParams zeros(std::size_t obs_dim, std::size_t action_dim);

  std::size_t obs_dim() const { return mean_net.input_dim(); }
  std::size_t action_dim() const { return log_std.size(); }

  ActorParams zeros_like() const;
  // Projects log_std back into [kLogStdMin, kLogStdMax].
  void clamp();

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::string> tensor_names() const;

  bool operator==(const ActorParams&) const = default;
};

struct CriticParams {
  MlpParams value_net;  // obs_dim -> 1

  static CriticParams init(std::size_t obs_dim, Rng& rng);

  CriticParams zeros_like() const { return {value_net.zeros_like()}; }
  std::vector<Tensor*> tensors() { return value_net.tensors(); }
  std::vector<const Tensor*> tensors() const { return value_net.tensors(); }
  std::vector<std::string> tensor_names() const { return value_net.tensor_names(); }

  bool operator==(const CriticParams&) const = default;
};

// Diagonal Gaussian for one state.
struct GaussianDist {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t dim() const { return mean.size(); }
};

GaussianDist policy_distribution(const ActorParams& actor, std::span<const double> state);
double log_prob(const GaussianDist& dist, std::span<const double> action);
// KL(p || q), closed form.
double kl_divergence(const GaussianDist& p, const GaussianDist& q);
std::vector<double> sample_action(const GaussianDist& dist, Rng& rng);
double entropy(const GaussianDist& dist);

double value(const CriticParams& critic, std::span<const double> state);
// One value per row of states (batch x obs_dim).
std::vector<double> values(const CriticParams& critic, const Tensor& states);

// Batched policy evaluation used by the losses: means for every row plus the
// shared (clamped) log std.
struct GaussianBatch {
  Tensor mean;                   // batch x action_dim
  std::vector<double> log_std;   // action_dim, clamped
};

GaussianBatch actor_forward(const ActorParams& actor, const Tensor& states,
                            MlpCache* cache = nullptr);

// Gradient of a batched scalar objective with respect to an actor, given the
// objective's gradient w.r.t. the means (batch x action_dim) and w.r.t. the
// clamped log std. Entries of log_std outside the clamp range get zero.
ActorParams actor_backward(const ActorParams& actor, const MlpCache& cache,
                           const Tensor& d_mean, std::span<const double> d_log_std);

// Per-dimension partial derivatives of KL(p || q) for one state.
struct KlPartials {
  double value = 0.0;
  std::vector<double> d_mean_p, d_log_std_p, d_mean_q, d_log_std_q;
};

KlPartials kl_partials(std::span<const double> mean_p, std::span<const double> log_std_p,
                       std::span<const double> mean_q, std::span<const double> log_std_q);

void add_actor(Checkpoint& ckpt, const std::string& section, const ActorParams& actor);
ActorParams read_actor(const Checkpoint& ckpt, const std::string& section);
void add_critic(Checkpoint& ckpt, const std::string& section, const CriticParams& critic);
CriticParams read_critic(const Checkpoint& ckpt, const std::string& section);

}  // namespace p2pdrl

#endif  // P2PDRL_POLICY_HPP_
