#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "p2pdrl/envs.hpp"
#include "p2pdrl/errors.hpp"

namespace p2pdrl {

namespace {

// Pendulum: uniform rod pivoting at one end.
constexpr double kPendulumMass = 1.0;
constexpr double kPendulumLength = 1.0;

// Cartpole, classic control constants.
constexpr double kCartMass = 1.0;
constexpr double kPoleMass = 0.1;
constexpr double kPoleHalfLength = 0.5;
constexpr double kForceMag = 10.0;
constexpr double kThetaLimit = 12.0 * std::numbers::pi / 180.0;
constexpr double kPositionLimit = 2.4;

double wrap_angle(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double x = std::fmod(theta + std::numbers::pi, two_pi);
  if (x < 0.0) x += two_pi;
  return x - std::numbers::pi;
}

void require_finite_state(std::span<const double> state, const char* what) {
  for (double v : state) {
    if (!std::isfinite(v)) throw NumericError(std::string("env_step: non-finite ") + what);
  }
}

void require_dims(const EnvSpec& spec, std::span<const double> state,
                  std::span<const double> action) {
  if (state.size() != spec.state_dim) {
    throw ShapeError("env_step: state width " + std::to_string(state.size()) +
                     ", expected " + std::to_string(spec.state_dim));
  }
  if (action.size() != spec.action_dim) {
    throw ShapeError("env_step: action width " + std::to_string(action.size()) +
                     ", expected " + std::to_string(spec.action_dim));
  }
}

StepResult pendulum_step(const EnvSpec& spec, const DomainParams& domain,
                         std::span<const double> state, double action) {
  const double torque = std::clamp(action, spec.action_low, spec.action_high);
  const double theta = state[0];
  const double omega = state[1];
  const double err = wrap_angle(theta);
  const double reward = -(err * err + 0.1 * omega * omega + 0.001 * torque * torque);

  const double alpha = pendulum_torques(spec, domain, state, torque).angular_acceleration();
  const double next_omega = omega + spec.dt * alpha;
  const double next_theta = theta + spec.dt * next_omega;
  return {{next_theta, next_omega}, reward, false};
}

StepResult cartpole_step(const EnvSpec& spec, const DomainParams& domain,
                         std::span<const double> state, double action) {
  const double u = std::clamp(action, spec.action_low, spec.action_high);
  const double x = state[0];
  const double x_dot = state[1];
  const double theta = state[2];
  const double theta_dot = state[3];

  const double cart_mass = kCartMass * domain.mass_scale;
  const double pole_mass = kPoleMass * domain.mass_scale;
  const double total_mass = cart_mass + pole_mass;
  const double pole_moment = pole_mass * kPoleHalfLength;
  const double force = u * kForceMag + spec.wind_gain * domain.wind -
                       domain.friction_coeff * x_dot;

  const double sin_t = std::sin(theta);
  const double cos_t = std::cos(theta);
  const double temp = (force + pole_moment * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (domain.gravity * sin_t - cos_t * temp) /
      (kPoleHalfLength * (4.0 / 3.0 - pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_moment * theta_acc * cos_t / total_mass;

  const double next_x_dot = x_dot + spec.dt * x_acc;
  const double next_x = x + spec.dt * next_x_dot;
  const double next_theta_dot = theta_dot + spec.dt * theta_acc;
  const double next_theta = theta + spec.dt * next_theta_dot;

  const bool done = std::abs(next_x) > kPositionLimit || std::abs(next_theta) > kThetaLimit;
  return {{next_x, next_x_dot, next_theta, next_theta_dot}, 1.0, done};
}

}  // namespace

std::string_view task_name(TaskId task) {
  return task == TaskId::kPendulum ? "pendulum" : "cartpole";
}

EnvSpec pendulum_spec() {
  EnvSpec s;
  s.task = TaskId::kPendulum;
  s.name = "pendulum";
  s.state_dim = 2;  // theta, theta_dot
  s.obs_dim = 3;    // cos, sin, theta_dot
  s.action_dim = 1;
  s.action_low = -2.0;
  s.action_high = 2.0;
  s.dt = 0.05;
  s.max_episode_steps = 200;
  s.nominal = {0.0, 10.0, 0.05, 1.0, 0.0};
  s.start_position = std::numbers::pi;  // hanging down
  s.wind_gain = 0.3;
  return s;
}

EnvSpec cartpole_spec() {
  EnvSpec s;
  s.task = TaskId::kCartpole;
  s.name = "cartpole";
  s.state_dim = 4;  // x, x_dot, theta, theta_dot
  s.obs_dim = 4;
  s.action_dim = 1;
  s.action_low = -1.0;
  s.action_high = 1.0;
  s.dt = 0.05;
  s.max_episode_steps = 500;
  s.nominal = {0.0, 9.8, 0.1, 1.0, 0.0};
  s.start_position = 0.0;
  s.wind_gain = 1.0;
  return s;
}

EnvSpec make_env_spec(std::string_view id) {
  if (id == "pendulum") return pendulum_spec();
  if (id == "cartpole") return cartpole_spec();
  throw ConfigError("task", "unknown task '" + std::string(id) + "' (pendulum|cartpole)");
}

EnvState env_reset(const EnvSpec& spec, const DomainParams& domain, Rng& rng) {
  EnvState state(spec.state_dim, 0.0);
  double position = spec.start_position + domain.init_offset;
  if (spec.start_noise > 0.0) position += rng.uniform(-spec.start_noise, spec.start_noise);
  // Only the position coordinate is perturbed: theta for the pendulum, the
  // cart position for cartpole.
  state[0] = position;
  return state;
}

std::vector<double> observe(const EnvSpec& spec, std::span<const double> state) {
  if (spec.task == TaskId::kPendulum) {
    return {std::cos(state[0]), std::sin(state[0]), state[1]};
  }
  return {state.begin(), state.end()};
}

PendulumTorques pendulum_torques(const EnvSpec& spec, const DomainParams& domain,
                                 std::span<const double> state, double torque) {
  const double mass = kPendulumMass * domain.mass_scale;
  PendulumTorques t;
  t.gravity = mass * domain.gravity * (0.5 * kPendulumLength) * std::sin(state[0]);
  t.control = torque;
  t.wind = spec.wind_gain * domain.wind;
  t.friction = -domain.friction_coeff * state[1];
  t.inertia = mass * kPendulumLength * kPendulumLength / 3.0;
  return t;
}

double pendulum_energy(const EnvSpec&, const DomainParams& domain,
                       std::span<const double> state) {
  const double mass = kPendulumMass * domain.mass_scale;
  const double inertia = mass * kPendulumLength * kPendulumLength / 3.0;
  return 0.5 * inertia * state[1] * state[1] +
         mass * domain.gravity * (0.5 * kPendulumLength) * std::cos(state[0]);
}

StepResult env_step(const EnvSpec& spec, const DomainParams& domain,
                    std::span<const double> state, std::span<const double> action) {
  require_dims(spec, state, action);
  require_finite_state(state, "state");
  require_finite_state(action, "action");
  StepResult r = spec.task == TaskId::kPendulum ? pendulum_step(spec, domain, state, action[0])
                                                : cartpole_step(spec, domain, state, action[0]);
  require_finite_state(r.next_state, "next state");
  return r;
}

}  // namespace p2pdrl
