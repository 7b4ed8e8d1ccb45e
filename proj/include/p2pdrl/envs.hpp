#ifndef P2PDRL_ENVS_HPP_
#define P2PDRL_ENVS_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "p2pdrl/rng.hpp"

namespace p2pdrl {

// One sampled environment variant.
struct DomainParams {
  double wind = 0.0;           // force on the cart / torque bias on the pendulum
  double gravity = 10.0;       // m/s^2
  double friction_coeff = 0.0; // viscous damping coefficient
  double mass_scale = 1.0;     // multiplier on every body mass
  double init_offset = 0.0;    // shift of the initial position coordinate

  bool operator==(const DomainParams&) const = default;
};

enum class WindPartition {
  kNone,
  kNegative,   // wind in [-5 eps, 0]
  kPositive,   // wind in [0, +5 eps]
  kAlternate,  // even workers negative, odd workers positive
};

std::string_view to_string(WindPartition p);
WindPartition parse_wind_partition(std::string_view text);

// Width of every randomized interval is controlled by the single scalar
// epsilon in [0, 1].
struct RandomizationConfig {
  double epsilon = 0.0;
  DomainParams base;
  WindPartition partition = WindPartition::kNone;

  void validate() const;
  // Resolves kAlternate into the half used by worker k.
  RandomizationConfig for_worker(std::size_t k) const;
};

// Closed interval [lo, hi] of every field for a given config.
struct DomainBounds {
  DomainParams lo;
  DomainParams hi;
};

DomainBounds domain_bounds(const RandomizationConfig& cfg);
bool within_bounds(const DomainParams& d, const DomainBounds& b);

DomainParams sample_domain(const RandomizationConfig& cfg, Rng& rng);

enum class TaskId { kPendulum, kCartpole };

struct EnvSpec {
  TaskId task = TaskId::kPendulum;
  std::string name;
  std::size_t state_dim = 0;   // physical state carried between steps
  std::size_t obs_dim = 0;     // policy input
  std::size_t action_dim = 0;
  double action_low = 0.0;     // bounds applied to the raw policy action
  double action_high = 0.0;
  double dt = 0.05;
  int max_episode_steps = 0;
  DomainParams nominal;        // epsilon = 0 domain
  double start_position = 0.0; // nominal value of the position coordinate
  double start_noise = 0.0;    // extra U(-n, n) on the start position; 0 by default
  double wind_gain = 1.0;      // scale from the wind parameter to force/torque
};

EnvSpec pendulum_spec();
EnvSpec cartpole_spec();
// Accepts "pendulum" or "cartpole"; throws ConfigError("task", ...) otherwise.
EnvSpec make_env_spec(std::string_view id);
std::string_view task_name(TaskId task);

using EnvState = std::vector<double>;

EnvState env_reset(const EnvSpec& spec, const DomainParams& domain, Rng& rng);
std::vector<double> observe(const EnvSpec& spec, std::span<const double> state);

struct StepResult {
  EnvState next_state;
  double reward = 0.0;
  bool done = false;  // task termination; time limits are handled by the caller
};

StepResult env_step(const EnvSpec& spec, const DomainParams& domain,
                    std::span<const double> state, std::span<const double> action);

// Pendulum internals, exposed for tests. theta = 0 is upright.
struct PendulumTorques {
  double gravity = 0.0;
  double control = 0.0;
  double wind = 0.0;
  double friction = 0.0;
  double inertia = 0.0;

  double angular_acceleration() const {
    return (gravity + control + wind + friction) / inertia;
  }
};

PendulumTorques pendulum_torques(const EnvSpec& spec, const DomainParams& domain,
                                 std::span<const double> state, double torque);
// Kinetic plus potential energy (zero potential at the pivot height).
double pendulum_energy(const EnvSpec& spec, const DomainParams& domain,
                       std::span<const double> state);

}  // namespace p2pdrl

#endif  // P2PDRL_ENVS_HPP_
