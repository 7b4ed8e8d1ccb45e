#include "p2pdrl/evaluation.hpp"

#include <cmath>
#include <numeric>

#include "p2pdrl/errors.hpp"

namespace p2pdrl {

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return std::nan("");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stderr_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double n = static_cast<double>(xs.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

EvalResult summarize(std::vector<double> returns) {
  EvalResult r;
  r.mean = mean_of(returns);
  r.stderr = stderr_of(returns);
  r.returns = std::move(returns);
  return r;
}

double run_episode(const ActorParams& actor, const EnvSpec& spec, const DomainParams& domain,
                   Rng& rng, bool stochastic) {
  EnvState state = env_reset(spec, domain, rng);
  double total = 0.0;
  for (int t = 0; t < spec.max_episode_steps; ++t) {
    const GaussianDist dist = policy_distribution(actor, observe(spec, state));
    const std::vector<double> action = stochastic ? sample_action(dist, rng) : dist.mean;
    StepResult step = env_step(spec, domain, state, action);
    total += step.reward;
    if (step.done) break;
    state = std::move(step.next_state);
  }
  return total;
}

EvalResult evaluate_policy(const ActorParams& actor, const EnvSpec& spec, double epsilon_te,
                           int episodes, Rng& rng, bool stochastic) {
  if (episodes < 1) throw ConfigError("eval_episodes", "must be >= 1");
  const RandomizationConfig rc{epsilon_te, spec.nominal, WindPartition::kNone};
  rc.validate();
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    const DomainParams domain = sample_domain(rc, rng);
    returns.push_back(run_episode(actor, spec, domain, rng, stochastic));
  }
  return summarize(std::move(returns));
}

}  // namespace p2pdrl
