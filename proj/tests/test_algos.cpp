#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "p2pdrl/errors.hpp"
#include "p2pdrl/losses.hpp"
#include "p2pdrl/trainers.hpp"
#include "test_support.hpp"

using namespace p2pdrl;
using namespace p2pdrl::testing;

namespace {

ActorParams tiny_actor(Rng& rng, std::size_t obs = 2, std::size_t act = 1) {
  ActorParams a = ActorParams::zeros(obs, act);
  a.mean_net = random_mlp({obs, 5, 5, act}, rng);
  for (double& v : a.log_std.values()) v = rng.uniform(-0.8, 0.4);
  return a;
}

double oracle_log_prob(const ActorParams& a, const Tensor& states, const Tensor& actions,
                       std::size_t b) {
  return log_prob(policy_distribution(a, states.row(b)), actions.row(b));
}

// Random minibatch whose probability ratios stay clear of the clip kinks so
// central differences are well defined.
Minibatch tiny_minibatch(const ActorParams& a, Rng& rng, std::size_t n = 4, double clip = 0.2) {
  Minibatch mb;
  mb.states = random_matrix(n, a.obs_dim(), rng, 1.5);
  mb.actions = random_matrix(n, a.action_dim(), rng, 2.0);
  for (std::size_t b = 0; b < n; ++b) {
    const double logp = oracle_log_prob(a, mb.states, mb.actions, b);
    double shift = 0.0;
    do {
      shift = rng.uniform(-0.5, 0.5);
    } while (std::abs(std::exp(shift) - (1 - clip)) < 0.02 ||
             std::abs(std::exp(shift) - (1 + clip)) < 0.02);
    mb.old_log_probs.push_back(logp - shift);
    mb.advantages.push_back(rng.uniform(-2, 2));
    mb.targets.push_back(rng.uniform(-3, 3));
    mb.old_values.push_back(rng.uniform(-3, 3));
  }
  return mb;
}

Minibatch single_sample(double ratio, double adv) {
  Minibatch mb;
  mb.states = Tensor::matrix(1, 2);
  mb.actions = Tensor::matrix(1, 1);
  const double logp = -0.5 * std::log(2.0 * M_PI);
  mb.old_log_probs = {logp - std::log(ratio)};
  mb.advantages = {adv};
  mb.targets = {0.0};
  mb.old_values = {0.0};
  return mb;
}

double oracle_batch_kl(const ActorParams& p, const ActorParams& q, const Tensor& states) {
  double total = 0.0;
  for (std::size_t b = 0; b < states.rows(); ++b) {
    total += kl_divergence(policy_distribution(p, states.row(b)),
                           policy_distribution(q, states.row(b)));
  }
  return total / static_cast<double>(states.rows());
}

double grad_norm(const ActorParams& g) { return std::sqrt(squared_norm(g.tensors())); }

template <class P>
double max_abs_diff(const P& a, const P& b) {
  const auto x = a.tensors();
  const auto y = b.tensors();
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    for (std::size_t i = 0; i < x[k]->size(); ++i) {
      worst = std::max(worst, std::abs((*x[k])[i] - (*y[k])[i]));
    }
  }
  return worst;
}

Trajectory hand_trajectory(std::vector<double> rewards, std::vector<double> values,
                           std::vector<std::uint8_t> dones, double bootstrap) {
  Trajectory t;
  t.rewards = std::move(rewards);
  t.values = std::move(values);
  t.dones = std::move(dones);
  t.bootstrap_value = bootstrap;
  return t;
}

Hyperparams small_hp() {
  Hyperparams hp;
  hp.steps_per_worker = 96;
  hp.epochs = 2;
  hp.minibatch = 32;
  hp.lr = 1e-3;
  return hp;
}

struct Fixture {
  EnvSpec spec = pendulum_spec();
  RandomizationConfig rc{0.2, pendulum_spec().nominal, WindPartition::kNone};
  Rng seed_stream{17};
  InitialParams init;

  Fixture() {
    Rng ir = init_stream(seed_stream);
    init = initial_params(spec, ir);
  }
  WorkerStreams streams(std::size_t k) const {
    return WorkerStreams::from(worker_stream(seed_stream, k));
  }
  std::vector<WorkerState> workers(std::size_t k) const {
    std::vector<WorkerState> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(WorkerState::create(init.actor, init.critic, streams(i)));
    return out;
  }
  SingleAgentState agent(std::vector<std::size_t> ids) const {
    std::vector<WorkerStreams> c;
    for (std::size_t i : ids) c.push_back(streams(i));
    return SingleAgentState::create(init.actor, init.critic, std::move(c));
  }
  GlobalPolicyState global(std::size_t k) const {
    std::vector<WorkerStreams> s;
    for (std::size_t i = 0; i < k; ++i) s.push_back(streams(i));
    return GlobalPolicyState::create(init, std::move(s));
  }
};

}  // namespace

// ---- GAE -------------------------------------------------------------------

TEST_CASE("compute_gae: single terminal step") {
  Trajectory t = hand_trajectory({2.5}, {0.7}, {1}, 0.0);
  compute_gae(t, 0.99, 0.95);
  CHECK(t.advantages[0] == doctest::Approx(2.5 - 0.7).epsilon(1e-15));
  CHECK(t.targets[0] == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("compute_gae: gamma = lambda = 1 telescopes") {
  Trajectory t = hand_trajectory({1.0, -2.0}, {0.3, 0.9}, {0, 0}, 4.0);
  compute_gae(t, 1.0, 1.0);
  const double d0 = 1.0 + 0.9 - 0.3, d1 = -2.0 + 4.0 - 0.9;
  CHECK(t.advantages[0] == doctest::Approx(d0 + d1).epsilon(1e-15));
  CHECK(t.advantages[1] == doctest::Approx(d1).epsilon(1e-15));
}

TEST_CASE("compute_gae: hand recursion example") {
  Trajectory t = hand_trajectory({1.0, 1.0}, {0.5, 0.5}, {0, 0}, 0.5);
  compute_gae(t, 0.99, 0.95);
  CHECK(t.advantages[1] == doctest::Approx(0.995).epsilon(1e-14));
  CHECK(t.advantages[0] == doctest::Approx(0.995 + 0.9405 * 0.995).epsilon(1e-14));
  CHECK(t.advantages[0] == doctest::Approx(1.9308).epsilon(1e-4));
  CHECK(t.targets[0] == doctest::Approx(t.advantages[0] + 0.5).epsilon(1e-15));
}

TEST_CASE("compute_gae: done cuts the recursion; time-limit value bootstraps") {
  Trajectory t = hand_trajectory({1.0, 1.0, 1.0}, {0.2, 0.4, 0.6}, {0, 1, 0}, 2.0);
  compute_gae(t, 0.9, 0.8);
  const double a2 = 1.0 + 0.9 * 2.0 - 0.6;
  const double a1 = 1.0 - 0.4;
  CHECK(t.advantages[2] == doctest::Approx(a2).epsilon(1e-15));
  CHECK(t.advantages[1] == doctest::Approx(a1).epsilon(1e-15));
  CHECK(t.advantages[0] == doctest::Approx(1.0 + 0.9 * 0.4 - 0.2 + 0.72 * a1).epsilon(1e-15));

  t.timeout_values = {0.0, 3.0, 0.0};
  compute_gae(t, 0.9, 0.8);
  CHECK(t.advantages[1] == doctest::Approx(1.0 + 0.9 * 3.0 - 0.4).epsilon(1e-15));
  CHECK(t.advantages[2] == doctest::Approx(a2).epsilon(1e-15));
}

TEST_CASE("normalize_advantages: zero mean, unit std") {
  std::vector<double> a{1.0, 4.0, -2.0, 7.0, 0.5};
  normalize_advantages(a);
  double m = 0.0, v = 0.0;
  for (double x : a) m += x;
  m /= 5;
  for (double x : a) v += (x - m) * (x - m);
  CHECK(std::abs(m) < 1e-15);
  CHECK(v / 5 == doctest::Approx(1.0).epsilon(1e-7));
}

// ---- PPO loss ----------------------------------------------------------------

TEST_CASE("ppo_loss: single-sample clip examples") {
  const ActorParams a = ActorParams::zeros(2, 1);
  CHECK(ppo_loss(a, single_sample(1.5, 1.0), 0.2).loss == doctest::Approx(-1.2).epsilon(1e-12));
  CHECK(ppo_loss(a, single_sample(0.5, -1.0), 0.2).loss == doctest::Approx(0.8).epsilon(1e-12));
  // Clipped branches carry no gradient.
  CHECK(grad_norm(ppo_loss(a, single_sample(1.5, 1.0), 0.2).grad) == 0.0);
  CHECK(grad_norm(ppo_loss(a, single_sample(0.5, -1.0), 0.2).grad) == 0.0);
}

TEST_CASE("ppo_loss: ratio 1 gives -mean(A) and the vanilla policy gradient") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    ActorParams a = tiny_actor(rng);
    Minibatch mb = tiny_minibatch(a, rng, 6);
    double mean_adv = 0.0;
    for (std::size_t b = 0; b < mb.size(); ++b) {
      mb.old_log_probs[b] = oracle_log_prob(a, mb.states, mb.actions, b);
      mean_adv += mb.advantages[b] / 6.0;
    }
    const LossAndGrad l = ppo_loss(a, mb, 0.2);
    CHECK(l.loss == doctest::Approx(-mean_adv).epsilon(1e-12));

    auto pg = [&] {
      double s = 0.0;
      for (std::size_t b = 0; b < mb.size(); ++b) {
        s -= mb.advantages[b] * oracle_log_prob(a, mb.states, mb.actions, b);
      }
      return s / static_cast<double>(mb.size());
    };
    CHECK(finite_difference_check(a.tensors(), const_tensors(l.grad), pg).empty());
  }
}

TEST_CASE("ppo_loss: property - clipped surrogate never exceeds unclipped") {
  Rng rng(22);
  const ActorParams a = ActorParams::zeros(2, 1);
  for (int trial = 0; trial < 5000; ++trial) {
    const double ratio = std::exp(rng.uniform(-2, 2));
    const double adv = rng.uniform(-5, 5);
    const double clip = rng.uniform(0.01, 0.5);
    CHECK(-ppo_loss(a, single_sample(ratio, adv), clip).loss <= ratio * adv + 1e-12);
  }
}

TEST_CASE("ppo_loss: scaling advantages scales loss and gradient") {
  Rng rng(23);
  const ActorParams a = tiny_actor(rng);
  const Minibatch mb = tiny_minibatch(a, rng, 8);
  const LossAndGrad base = ppo_loss(a, mb, 0.2);
  for (double c : {0.25, 3.0, 17.0}) {
    Minibatch scaled = mb;
    for (double& v : scaled.advantages) v *= c;
    const LossAndGrad l = ppo_loss(a, scaled, 0.2);
    CHECK(l.loss == doctest::Approx(c * base.loss).epsilon(1e-12));
    ActorParams expected = base.grad;
    for (Tensor* t : expected.tensors()) {
      for (double& v : t->values()) v *= c;
    }
    CHECK(max_abs_diff(l.grad, expected) <= 1e-12 * c);
  }
}

TEST_CASE("ppo_loss: non-finite ratio names the sample") {
  Rng rng(24);
  const ActorParams a = tiny_actor(rng);
  Minibatch mb = tiny_minibatch(a, rng, 4);
  mb.old_log_probs[2] = -1e6;
  try {
    ppo_loss(a, mb, 0.2);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
  }
}

// ---- distillation -----------------------------------------------------------

TEST_CASE("distill_loss: identical workers give zero loss and gradient") {
  Rng rng(31);
  for (std::size_t k : {2u, 3u, 4u}) {
    const ActorParams a = tiny_actor(rng);
    std::vector<ActorParams> copies(k - 1, a);
    std::vector<const ActorParams*> peers;
    for (const auto& c : copies) peers.push_back(&c);
    const LossAndGrad l = distill_loss(a, peers, random_matrix(16, 2, rng, 2.0));
    CHECK(l.loss == 0.0);
    CHECK(grad_norm(l.grad) <= 1e-10);
  }
}

TEST_CASE("distill_loss: K = 2 is the batch-mean KL; K = 3 averages over peers") {
  Rng rng(32);
  const ActorParams a = tiny_actor(rng), b = tiny_actor(rng);
  const Tensor s = random_matrix(7, 2, rng);
  const ActorParams* one[] = {&b};
  CHECK(distill_loss(a, one, s).loss == doctest::Approx(oracle_batch_kl(a, b, s)).epsilon(1e-12));

  const ActorParams* two[] = {&a, &b};
  CHECK(distill_loss(a, two, s).loss ==
        doctest::Approx(0.5 * oracle_batch_kl(a, b, s)).epsilon(1e-12));

  CHECK(distill_loss(a, {}, s).loss == 0.0);
  CHECK(grad_norm(distill_loss(a, {}, s).grad) == 0.0);
}

TEST_CASE("distill_loss: invariant under peer permutation") {
  Rng rng(33);
  const ActorParams a = tiny_actor(rng), b = tiny_actor(rng), c = tiny_actor(rng),
                    d = tiny_actor(rng);
  const Tensor s = random_matrix(9, 2, rng);
  const ActorParams* order1[] = {&b, &c, &d};
  const ActorParams* order2[] = {&d, &b, &c};
  const LossAndGrad l1 = distill_loss(a, order1, s), l2 = distill_loss(a, order2, s);
  CHECK(l1.loss == doctest::Approx(l2.loss).epsilon(1e-14));
  CHECK(max_abs_diff(l1.grad, l2.grad) <= 1e-14);
}

TEST_CASE("actor_objective: identical peers add exactly nothing") {
  Rng rng(34);
  const ActorParams a = tiny_actor(rng);
  const Minibatch mb = tiny_minibatch(a, rng, 8);
  const ActorParams* peers[] = {&a};
  const ActorLoss with = actor_objective(a, mb, peers, {0.2, 1.0, 0.0});
  const ActorLoss without = actor_objective(a, mb, {}, {0.2, 0.0, 0.0});
  CHECK(with.distill == 0.0);
  CHECK(with.grad == without.grad);
}

TEST_CASE("student_distill_loss: gradient vanishes at the teachers; sums over teachers") {
  Rng rng(35);
  const ActorParams a = tiny_actor(rng), b = tiny_actor(rng), g = tiny_actor(rng);
  const Tensor s = random_matrix(10, 2, rng);
  const ActorParams* same[] = {&a, &a};
  CHECK(grad_norm(student_distill_loss(a, same, s).grad) <= 1e-10);

  const ActorParams* ta[] = {&a};
  const ActorParams* tb[] = {&b};
  const ActorParams* tab[] = {&a, &b};
  const LossAndGrad la = student_distill_loss(g, ta, s), lb = student_distill_loss(g, tb, s);
  const LossAndGrad lab = student_distill_loss(g, tab, s);
  CHECK(lab.loss == doctest::Approx(la.loss + lb.loss).epsilon(1e-13));
  CHECK(lab.loss == doctest::Approx(oracle_batch_kl(a, g, s) + oracle_batch_kl(b, g, s)).epsilon(1e-12));
  ActorParams sum = la.grad;
  auto dst = sum.tensors();
  const auto src = lb.grad.tensors();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    for (std::size_t i = 0; i < dst[k]->size(); ++i) (*dst[k])[i] += (*src[k])[i];
  }
  CHECK(max_abs_diff(lab.grad, sum) <= 1e-13);
}

// ---- value loss ---------------------------------------------------------------

TEST_CASE("value_loss: examples and naive oracle") {
  Rng rng(41);
  CriticParams c{random_mlp({2, 6, 6, 1}, rng)};
  Minibatch mb = tiny_minibatch(tiny_actor(rng), rng, 5);
  const auto v = values(c, mb.states);
  mb.targets = v;
  CHECK(value_loss(c, mb).loss == 0.0);
  for (std::size_t b = 0; b < 5; ++b) mb.targets[b] = v[b] - 1.5;
  CHECK(value_loss(c, mb).loss == doctest::Approx(2.25).epsilon(1e-12));

  for (double& t : mb.targets) t = rng.uniform(-3, 3);
  const Tensor oracle = naive_forward(c.value_net, mb.states);
  double expected = 0.0;
  for (std::size_t b = 0; b < 5; ++b) expected += (oracle[b] - mb.targets[b]) * (oracle[b] - mb.targets[b]);
  CHECK(std::abs(value_loss(c, mb).loss - expected / 5) <= 1e-12);
}

// ---- finite-difference gradient checks ---------------------------------------

TEST_CASE("gradients of every loss match central differences") {
  Rng rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    INFO("trial " << trial);
    ActorParams a = tiny_actor(rng);
    const ActorParams p1 = tiny_actor(rng), p2 = tiny_actor(rng);
    const Minibatch mb = tiny_minibatch(a, rng, 4);

    const LossAndGrad ppo = ppo_loss(a, mb, 0.2);
    CHECK(finite_difference_check(a.tensors(), const_tensors(ppo.grad),
                                  [&] { return ppo_loss(a, mb, 0.2).loss; })
              .empty());

    const ActorParams* peers[] = {&p1, &p2};
    const LossAndGrad dis = distill_loss(a, peers, mb.states);
    CHECK(finite_difference_check(a.tensors(), const_tensors(dis.grad),
                                  [&] { return distill_loss(a, peers, mb.states).loss; })
              .empty());

    const ActorObjectiveOptions opt{0.2, 0.7, 0.01};
    const ActorLoss full = actor_objective(a, mb, peers, opt);
    CHECK(finite_difference_check(a.tensors(), const_tensors(full.grad), [&] {
            const ActorLoss l = actor_objective(a, mb, peers, opt);
            return l.ppo + opt.alpha * l.distill - opt.entropy_coef * l.entropy;
          }).empty());

    const LossAndGrad stu = student_distill_loss(a, peers, mb.states);
    CHECK(finite_difference_check(a.tensors(), const_tensors(stu.grad),
                                  [&] { return student_distill_loss(a, peers, mb.states).loss; })
              .empty());

    CriticParams c{random_mlp({2, 5, 5, 1}, rng)};
    const CriticLoss vl = value_loss(c, mb);
    CHECK(finite_difference_check(c.tensors(), const_tensors(vl.grad),
                                  [&] { return value_loss(c, mb).loss; })
              .empty());
  }
}

TEST_CASE("actor_backward: log_std outside the clamp gets no gradient") {
  Rng rng(52);
  ActorParams a = tiny_actor(rng);
  a.log_std[0] = -7.0;
  const Minibatch mb = tiny_minibatch(a, rng, 4);
  CHECK(ppo_loss(a, mb, 0.2).grad.log_std[0] == 0.0);
}

// ---- rollouts -----------------------------------------------------------------

TEST_CASE("collect_rollout: lengths, determinism, replay") {
  Fixture f;
  for (const EnvSpec& spec : {pendulum_spec(), cartpole_spec()}) {
    Rng ir(3);
    const InitialParams init = initial_params(spec, ir);
    RandomizationConfig rc{0.5, spec.nominal, WindPartition::kNone};
    auto run = [&](int steps) {
      WorkerStreams s = WorkerStreams::from(Rng(9));
      s.domain = sample_domain(rc, s.domain_rng);
      s.has_domain = true;
      return collect_rollout(init.actor, init.critic, s, spec, steps, {&rc, true});
    };
    const Trajectory t5 = run(5);
    CHECK(t5.size() == 5);
    CHECK(t5.observations.rows() == 5);
    CHECK(t5.actions.rows() == 5);
    CHECK(t5.values.size() == 5);
    CHECK(t5.log_probs.size() == 5);

    const Trajectory a = run(700), b = run(700);
    CHECK(a.observations == b.observations);
    CHECK(a.actions == b.actions);
    CHECK(a.rewards == b.rewards);
    CHECK(a.log_probs == b.log_probs);

    for (std::size_t t = 0; t < a.size(); ++t) {
      const StepResult r = env_step(spec, a.domains[t], a.env_states.row(t), a.actions.row(t));
      CHECK(r.reward == a.rewards[t]);
      CHECK(std::isfinite(a.log_probs[t]));
    }
  }
}

TEST_CASE("collect_rollout: requires a sampled domain") {
  Fixture f;
  WorkerStreams s = f.streams(0);
  CHECK_THROWS_AS(collect_rollout(f.init.actor, f.init.critic, s, f.spec, 4), StateError);
}

// ---- trainers -----------------------------------------------------------------

TEST_CASE("p2pdrl with alpha 0 and K 1 reproduces vanilla PPO exactly") {
  Fixture f;
  Hyperparams hp = small_hp();
  hp.alpha = 0.0;
  hp.workers = 1;
  auto workers = f.workers(1);
  auto agent = f.agent({0});
  for (int it = 0; it < 3; ++it) {
    p2pdrl_iteration(workers, f.spec, hp, f.rc);
    vanilla_ppo_iteration(agent, f.spec, hp, f.rc);
    CHECK(max_abs_diff(workers[0].actor, agent.actor) <= 1e-12);
    CHECK(max_abs_diff(workers[0].critic, agent.critic) <= 1e-12);
  }
}

TEST_CASE("distributed PPO with K 1 reproduces vanilla PPO exactly") {
  Fixture f;
  Hyperparams hp = small_hp();
  hp.workers = 1;
  auto a = f.agent({0});
  auto b = f.agent({0});
  for (int it = 0; it < 3; ++it) {
    vanilla_ppo_iteration(a, f.spec, hp, f.rc);
    distributed_ppo_iteration(b, f.spec, hp, f.rc);
    CHECK(max_abs_diff(a.actor, b.actor) <= 1e-12);
    CHECK(max_abs_diff(a.critic, b.critic) <= 1e-12);
  }
}

TEST_CASE("distributed PPO: identical local datasets average to a single gradient") {
  Fixture f;
  Hyperparams hp = small_hp();
  auto one = f.agent({0});
  auto twin = f.agent({0, 0});
  for (int it = 0; it < 2; ++it) {
    distributed_ppo_iteration(one, f.spec, hp, f.rc);
    distributed_ppo_iteration(twin, f.spec, hp, f.rc);
  }
  CHECK(max_abs_diff(one.actor, twin.actor) <= 1e-12);
}

TEST_CASE("p2pdrl with alpha 0 and K 2 equals independent PPO runs per worker") {
  Fixture f;
  Hyperparams hp = small_hp();
  hp.alpha = 0.0;
  auto workers = f.workers(2);
  std::vector<SingleAgentState> solo{f.agent({0}), f.agent({1})};
  Hyperparams solo_hp = hp;
  solo_hp.workers = 1;
  for (int it = 0; it < 2; ++it) {
    p2pdrl_iteration(workers, f.spec, hp, f.rc);
    for (auto& s : solo) vanilla_ppo_iteration(s, f.spec, solo_hp, f.rc);
  }
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(max_abs_diff(workers[k].actor, solo[k].actor) <= 1e-12);
    CHECK(max_abs_diff(workers[k].critic, solo[k].critic) <= 1e-12);
  }
  CHECK(max_abs_diff(workers[0].actor, workers[1].actor) > 0.0);
}

TEST_CASE("p2pdrl with alpha > 0 couples the workers") {
  Fixture f;
  Hyperparams hp = small_hp();
  hp.alpha = 1.0;
  auto coupled = f.workers(2);
  auto free = f.workers(2);
  Hyperparams free_hp = hp;
  free_hp.alpha = 0.0;
  const IterationResult r = p2pdrl_iteration(coupled, f.spec, hp, f.rc);
  p2pdrl_iteration(free, f.spec, free_hp, f.rc);
  CHECK(max_abs_diff(coupled[0].actor, free[0].actor) > 0.0);
  CHECK(r.workers[0].distill_loss > 0.0);
}

TEST_CASE("distral with alpha 0 leaves locals as independent PPO") {
  Fixture f;
  Hyperparams hp = small_hp();
  hp.alpha = 0.0;
  auto g = f.global(2);
  auto workers = f.workers(2);
  for (int it = 0; it < 2; ++it) {
    distral_iteration(g, f.spec, hp, f.rc);
    p2pdrl_iteration(workers, f.spec, hp, f.rc);
  }
  for (std::size_t k = 0; k < 2; ++k) CHECK(max_abs_diff(g.locals[k].actor, workers[k].actor) == 0.0);
  CHECK(max_abs_diff(g.global, f.init.actor) > 0.0);
}

TEST_CASE("dnc: never distilling with alpha 0 is independent PPO") {
  Fixture f;
  Hyperparams hp = small_hp();
  hp.alpha = 0.0;
  auto g = f.global(2);
  auto workers = f.workers(2);
  for (int it = 0; it < 2; ++it) {
    dnc_iteration(g, f.spec, hp, f.rc, kNeverDistill);
    p2pdrl_iteration(workers, f.spec, hp, f.rc);
  }
  for (std::size_t k = 0; k < 2; ++k) CHECK(max_abs_diff(g.locals[k].actor, workers[k].actor) == 0.0);
  CHECK(g.global == f.init.actor);
}

TEST_CASE("dnc: reset makes every local equal the global; regularizer restarts at 0") {
  Fixture f;
  Hyperparams hp = small_hp();
  auto g = f.global(3);
  dnc_iteration(g, f.spec, hp, f.rc, 2);
  CHECK(!(g.locals[0].actor == g.locals[1].actor));
  dnc_iteration(g, f.spec, hp, f.rc, 2);
  for (const auto& w : g.locals) {
    CHECK(w.actor == g.global);
    CHECK(w.actor_opt.t == 0);
  }
  const ActorParams* peer[] = {&g.global};
  Rng rng(1);
  CHECK(distill_loss(g.locals[0].actor, peer, random_matrix(8, f.spec.obs_dim, rng)).loss == 0.0);
  CHECK_THROWS_AS(dnc_iteration(g, f.spec, hp, f.rc, 0), ConfigError);
}

TEST_CASE("every algorithm consumes exactly K*T environment steps per iteration") {
  Fixture f;
  Hyperparams hp = small_hp();
  hp.workers = 3;
  hp.epochs = 1;
  const std::int64_t expected = 3 * hp.steps_per_worker;
  auto w = f.workers(3);
  auto a = f.agent({0, 1, 2});
  auto b = f.agent({0, 1, 2});
  auto g1 = f.global(3);
  auto g2 = f.global(3);
  CHECK(p2pdrl_iteration(w, f.spec, hp, f.rc).env_steps == expected);
  CHECK(vanilla_ppo_iteration(a, f.spec, hp, f.rc).env_steps == expected);
  CHECK(distributed_ppo_iteration(b, f.spec, hp, f.rc).env_steps == expected);
  CHECK(distral_iteration(g1, f.spec, hp, f.rc).env_steps == expected);
  CHECK(dnc_iteration(g2, f.spec, hp, f.rc, 1).env_steps == expected);
}

TEST_CASE("snapshot_per_epoch changes which peer parameters are read") {
  Fixture f;
  Hyperparams hp = small_hp();
  auto live = f.workers(2);
  auto snap = f.workers(2);
  Hyperparams snap_hp = hp;
  snap_hp.snapshot_per_epoch = true;
  p2pdrl_iteration(live, f.spec, hp, f.rc);
  p2pdrl_iteration(snap, f.spec, snap_hp, f.rc);
  // Worker 0 reads worker 1 before it moves in either mode during round one,
  // but later rounds differ.
  CHECK(max_abs_diff(live[0].actor, snap[0].actor) > 0.0);
}

TEST_CASE("gradient variance diagnostic") {
  Fixture f;
  Hyperparams hp = small_hp();
  auto w = f.workers(2);
  const IterationResult r = p2pdrl_iteration(w, f.spec, hp, f.rc);
  for (const auto& m : r.workers) CHECK(std::isfinite(m.grad_variance_log));
  hp.minibatch = 64;
  auto w2 = f.workers(2);
  const IterationResult r2 = p2pdrl_iteration(w2, f.spec, hp, f.rc);
  CHECK(std::isnan(r2.workers[0].grad_variance_log));
}

TEST_CASE("Hyperparams::validate names the offending key") {
  auto key_of = [](Hyperparams hp) {
    try {
      hp.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string();
  };
  Hyperparams hp;
  CHECK(key_of(hp).empty());
  hp.gamma = 1.5;
  CHECK(key_of(hp) == "gamma");
  hp = {};
  hp.alpha = -1;
  CHECK(key_of(hp) == "alpha");
  hp = {};
  hp.workers = 0;
  CHECK(key_of(hp) == "workers");
  hp = {};
  hp.clip_eps = 0;
  CHECK(key_of(hp) == "clip_eps");
}
