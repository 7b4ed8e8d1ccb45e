#ifndef P2PDRL_EVALUATION_HPP_
#define P2PDRL_EVALUATION_HPP_

#include <span>
#include <vector>

#include "p2pdrl/envs.hpp"
#include "p2pdrl/policy.hpp"
#include "p2pdrl/rng.hpp"

namespace p2pdrl {

struct EvalResult {
  double mean = 0.0;
  double stderr = 0.0;  // sample std / sqrt(M); 0 when M == 1
  std::vector<double> returns;
};

// Return of one full episode (until done or the time limit).
double run_episode(const ActorParams& actor, const EnvSpec& spec, const DomainParams& domain,
                   Rng& rng, bool stochastic);

// M episodes, each on a fresh domain sampled at epsilon_te around the task's
// nominal domain. Deterministic evaluation acts with the Gaussian mean.
EvalResult evaluate_policy(const ActorParams& actor, const EnvSpec& spec, double epsilon_te,
                           int episodes, Rng& rng, bool stochastic = false);

EvalResult summarize(std::vector<double> returns);

double mean_of(std::span<const double> xs);
// Sample std / sqrt(n); 0 for n < 2.
double stderr_of(std::span<const double> xs);

}  // namespace p2pdrl

#endif  // P2PDRL_EVALUATION_HPP_
