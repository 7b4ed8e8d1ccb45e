#include "p2pdrl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>

#include "p2pdrl/checkpoint.hpp"
#include "p2pdrl/errors.hpp"
#include "p2pdrl/plot.hpp"

namespace p2pdrl {

struct SeedTrainer::State {
  EnvSpec spec;
  RandomizationConfig rand_cfg;
  std::vector<WorkerState> workers;          // P2PDRL
  std::optional<SingleAgentState> agent;     // PPO, DPPO
  std::optional<GlobalPolicyState> global;   // Distral, DnC
};

namespace {

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::vector<WorkerStreams> make_streams(const Rng& seed_stream, int k) {
  std::vector<WorkerStreams> out;
  for (int i = 0; i < k; ++i) {
    out.push_back(WorkerStreams::from(worker_stream(seed_stream, static_cast<std::size_t>(i))));
  }
  return out;
}

std::filesystem::path file_in(const ExperimentConfig& cfg, const std::string& suffix) {
  return cfg.output_dir / (cfg.experiment + suffix);
}

void save_policy_checkpoints(const SeedTrainer& t, const ExperimentConfig& cfg) {
  for (const NamedPolicy& p : t.policies()) {
    Checkpoint ckpt;
    add_actor(ckpt, "actor", *p.actor);
    if (p.critic) add_critic(ckpt, "critic", *p.critic);
    const std::string who =
        p.worker_id == kGlobalPolicy ? "global" : "worker" + std::to_string(p.worker_id);
    save_checkpoint(cfg.output_dir / "checkpoints" /
                        (cfg.experiment + "_seed" + std::to_string(t.seed()) + "_" + who + ".json"),
                    ckpt);
  }
}

// Per-seed training return for every iteration: mean over the worker rows.
std::map<int, double> training_curve(const std::vector<IterationRecord>& rows,
                                     std::uint64_t seed,
                                     std::map<int, std::int64_t>* steps = nullptr) {
  std::map<int, std::vector<double>> by_iter;
  for (const auto& r : rows) {
    if (r.seed != seed || r.worker_id < 0) continue;
    by_iter[r.iteration].push_back(r.mean_episode_return);
    if (steps) (*steps)[r.iteration] = r.env_steps;
  }
  std::map<int, double> out;
  for (const auto& [it, xs] : by_iter) out[it] = mean_of(xs);
  return out;
}

std::vector<std::uint64_t> seeds_in(const std::vector<IterationRecord>& rows) {
  std::set<std::uint64_t> s;
  for (const auto& r : rows) s.insert(r.seed);
  return {s.begin(), s.end()};
}

Series training_series(const std::string& name, const std::vector<IterationRecord>& rows) {
  std::map<double, std::vector<double>> samples;
  for (std::uint64_t seed : seeds_in(rows)) {
    std::map<int, std::int64_t> steps;
    for (const auto& [it, v] : training_curve(rows, seed, &steps)) {
      samples[static_cast<double>(steps[it])].push_back(v);
    }
  }
  return aggregate_series(name, samples);
}

std::string worker_label(int id) {
  if (id == kWorkerAverage) return "worker average";
  if (id == kGlobalPolicy) return "global policy";
  return "worker " + std::to_string(id);
}

}  // namespace

int headline_worker(Algorithm a) {
  return (a == Algorithm::kDistral || a == Algorithm::kDnc) ? kGlobalPolicy : 0;
}

SeedTrainer::SeedTrainer(const ExperimentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed), state_(std::make_unique<State>()) {
  cfg_.validate();
  state_->spec = cfg_.env_spec();
  state_->rand_cfg = cfg_.train_randomization();
  const Rng seed_stream(seed);
  Rng init_rng = init_stream(seed_stream);
  const InitialParams init = initial_params(state_->spec, init_rng);
  auto streams = make_streams(seed_stream, cfg_.hp.workers);
  switch (cfg_.algorithm) {
    case Algorithm::kP2pdrl:
      for (auto& s : streams) {
        state_->workers.push_back(WorkerState::create(init.actor, init.critic, std::move(s)));
      }
      break;
    case Algorithm::kPpo:
    case Algorithm::kDppo:
      state_->agent = SingleAgentState::create(init.actor, init.critic, std::move(streams));
      break;
    case Algorithm::kDistral:
    case Algorithm::kDnc:
      state_->global = GlobalPolicyState::create(init, std::move(streams));
      break;
  }
}

SeedTrainer::~SeedTrainer() = default;
SeedTrainer::SeedTrainer(SeedTrainer&&) noexcept = default;
SeedTrainer& SeedTrainer::operator=(SeedTrainer&&) noexcept = default;

std::vector<IterationRecord> SeedTrainer::step() {
  State& s = *state_;
  IterationResult r;
  switch (cfg_.algorithm) {
    case Algorithm::kP2pdrl: r = p2pdrl_iteration(s.workers, s.spec, cfg_.hp, s.rand_cfg); break;
    case Algorithm::kPpo: r = vanilla_ppo_iteration(*s.agent, s.spec, cfg_.hp, s.rand_cfg); break;
    case Algorithm::kDppo:
      r = distributed_ppo_iteration(*s.agent, s.spec, cfg_.hp, s.rand_cfg);
      break;
    case Algorithm::kDistral: r = distral_iteration(*s.global, s.spec, cfg_.hp, s.rand_cfg); break;
    case Algorithm::kDnc:
      r = dnc_iteration(*s.global, s.spec, cfg_.hp, s.rand_cfg, cfg_.hp.dnc_period);
      break;
  }
  ++iteration_;
  env_steps_ += r.env_steps;
  std::vector<IterationRecord> out;
  for (const WorkerMetrics& m : r.workers) {
    out.push_back({iteration_, env_steps_, seed_, m.worker_id, m.mean_episode_return, m.ppo_loss,
                   m.distill_loss, m.value_loss, m.grad_variance_log});
  }
  return out;
}

std::vector<NamedPolicy> SeedTrainer::policies() const {
  const State& s = *state_;
  std::vector<NamedPolicy> out;
  if (s.agent) {
    out.push_back({0, &s.agent->actor, &s.agent->critic});
  } else if (s.global) {
    for (std::size_t k = 0; k < s.global->locals.size(); ++k) {
      out.push_back({static_cast<int>(k), &s.global->locals[k].actor, &s.global->locals[k].critic});
    }
    out.push_back({kGlobalPolicy, &s.global->global, nullptr});
  } else {
    for (std::size_t k = 0; k < s.workers.size(); ++k) {
      out.push_back({static_cast<int>(k), &s.workers[k].actor, &s.workers[k].critic});
    }
  }
  return out;
}

const ActorParams& SeedTrainer::headline() const {
  const State& s = *state_;
  if (s.agent) return s.agent->actor;
  if (s.global) return s.global->global;
  return s.workers.front().actor;
}

Rng SeedTrainer::eval_rng() const { return eval_stream(Rng(seed_)); }

std::vector<EvalRecord> evaluate_trainer(const SeedTrainer& trainer, const ExperimentConfig& cfg,
                                         std::span<const double> epsilons) {
  const EnvSpec spec = cfg.env_spec();
  const auto policies = trainer.policies();
  std::vector<EvalRecord> out;
  for (double eps : epsilons) {
    std::vector<std::vector<double>> local_returns;
    std::vector<EvalRecord> global_rows;
    for (const NamedPolicy& p : policies) {
      Rng rng = trainer.eval_rng();
      const EvalResult r =
          evaluate_policy(*p.actor, spec, eps, cfg.eval_episodes, rng, cfg.stochastic_eval);
      const EvalRecord row{eps, trainer.seed(), p.worker_id, r.mean, r.stderr};
      if (p.worker_id >= 0) {
        out.push_back(row);
        local_returns.push_back(r.returns);
      } else {
        global_rows.push_back(row);
      }
    }
    if (local_returns.size() > 1) {
      std::vector<double> avg(local_returns.front().size(), 0.0);
      for (const auto& rs : local_returns) {
        for (std::size_t e = 0; e < avg.size(); ++e) avg[e] += rs[e];
      }
      for (double& v : avg) v /= static_cast<double>(local_returns.size());
      const EvalResult r = summarize(std::move(avg));
      out.push_back({eps, trainer.seed(), kWorkerAverage, r.mean, r.stderr});
    }
    out.insert(out.end(), global_rows.begin(), global_rows.end());
  }
  return out;
}

RunOutputs output_paths(const ExperimentConfig& cfg) {
  return {file_in(cfg, "_metrics.csv"), file_in(cfg, "_eval.csv"),
          cfg.eval_every > 0 ? file_in(cfg, "_curve.csv") : std::filesystem::path()};
}

MetricsLog run_training(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const RunOutputs paths = output_paths(cfg);
  write_text_file(file_in(cfg, "_config.txt"), format_config(cfg));
  CsvWriter metrics(paths.metrics, kMetricsHeader);
  CsvWriter evals(paths.eval, kEvalHeader);
  std::optional<CsvWriter> curves;
  if (cfg.eval_every > 0) curves.emplace(paths.curve, kCurveHeader);

  MetricsLog log;
  const int iterations = cfg.iterations();
  for (std::uint64_t seed : cfg.seeds) {
    SeedTrainer trainer(cfg, seed);
    auto record_curve = [&] {
      const double eps[] = {cfg.curve_epsilon_te};
      for (const EvalRecord& e : evaluate_trainer(trainer, cfg, eps)) {
        const CurveRecord c{trainer.iterations_done(), trainer.env_steps(), e.epsilon_te,
                            e.seed, e.worker_id, e.mean_return, e.stderr};
        curves->write_line(format_row(c));
        log.curves.push_back(c);
      }
    };
    if (curves) record_curve();
    for (int it = 1; it <= iterations; ++it) {
      const auto rows = trainer.step();
      for (const auto& r : rows) {
        metrics.write_line(format_row(r));
        log.iterations.push_back(r);
      }
      if (curves && (it % cfg.eval_every == 0 || it == iterations)) record_curve();
      if (progress) {
        char line[160];
        std::snprintf(line, sizeof(line), "[%s] seed %llu iteration %d/%d return %.2f",
                      cfg.experiment.c_str(), static_cast<unsigned long long>(seed), it,
                      iterations, rows.front().mean_episode_return);
        progress(line);
      }
    }
    for (const EvalRecord& e : evaluate_trainer(trainer, cfg, cfg.epsilon_te)) {
      evals.write_line(format_row(e));
      log.evals.push_back(e);
    }
    if (cfg.save_checkpoints) save_policy_checkpoints(trainer, cfg);
  }
  return log;
}

double asymptotic_return(const std::vector<IterationRecord>& rows, std::uint64_t seed) {
  const auto curve = training_curve(rows, seed);
  if (curve.empty()) throw StateError("no training records for seed " + std::to_string(seed));
  const std::size_t window = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(curve.size()))));
  std::vector<double> tail;
  auto it = curve.end();
  for (std::size_t i = 0; i < window; ++i) tail.push_back((--it)->second);
  return mean_of(tail);
}

DiversityResult train_vs_diversity(const ExperimentConfig& cfg, std::span<const double> grid,
                                   double epsilon_te, const ProgressFn& progress) {
  cfg.validate();
  if (grid.empty()) throw ConfigError("diversity_grid", "at least one value is required");
  DiversityResult result;
  const int headline = headline_worker(cfg.algorithm);
  for (double eps_tr : grid) {
    ExperimentConfig sub = cfg;
    sub.epsilon_tr = eps_tr;
    sub.epsilon_te = {epsilon_te};
    sub.experiment = cfg.experiment + "_eps" + label(eps_tr);
    const MetricsLog log = run_training(sub, progress);
    std::vector<double> asym, test;
    for (std::uint64_t seed : cfg.seeds) {
      DiversityRow row{eps_tr, seed, asymptotic_return(log.iterations, seed), std::nan(""),
                       std::nan("")};
      for (const EvalRecord& e : log.evals) {
        if (e.seed == seed && e.worker_id == headline) {
          row.test_return = e.mean_return;
          row.test_stderr = e.stderr;
        }
      }
      asym.push_back(row.asymptotic_return);
      test.push_back(row.test_return);
      result.rows.push_back(row);
    }
    result.summary.push_back(
        {eps_tr, mean_of(asym), stderr_of(asym), mean_of(test), stderr_of(test)});
  }

  std::string rows = "epsilon_tr,seed,asymptotic_return,test_return,test_stderr\n";
  char buf[256];
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%llu,%.17g,%.17g,%.17g\n", r.epsilon_tr,
                  static_cast<unsigned long long>(r.seed), r.asymptotic_return, r.test_return,
                  r.test_stderr);
    rows += buf;
  }
  write_text_file(file_in(cfg, "_diversity.csv"), rows);

  std::string summary =
      "epsilon_tr,asymptotic_mean,asymptotic_stderr,test_mean,test_stderr\n";
  Series train{"training (asymptotic)", {}, {}, {}};
  Series testing{"testing at " + label(epsilon_te), {}, {}, {}};
  for (const auto& s : result.summary) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.epsilon_tr,
                  s.asymptotic_mean, s.asymptotic_stderr, s.test_mean, s.test_stderr);
    summary += buf;
    train.x.push_back(s.epsilon_tr);
    train.y.push_back(s.asymptotic_mean);
    train.err.push_back(s.asymptotic_stderr);
    testing.x.push_back(s.epsilon_tr);
    testing.y.push_back(s.test_mean);
    testing.err.push_back(s.test_stderr);
  }
  write_text_file(file_in(cfg, "_diversity_summary.csv"), summary);
  write_svg(file_in(cfg, "_diversity.svg"),
            {std::string(to_string(cfg.algorithm)) + ": return vs training diversity",
             "epsilon_tr", "return", {train, testing}});
  return result;
}

SweepRow pick_best(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw StateError("sweep produced no rows");
  auto score = [](double v) { return std::isnan(v) ? -INFINITY : v; };
  SweepRow best = rows.front();
  for (const SweepRow& r : rows) {
    const double a = score(r.mean_asymptotic_return), b = score(best.mean_asymptotic_return);
    if (a > b || (a == b && (r.lr < best.lr || (r.lr == best.lr && r.alpha < best.alpha)))) {
      best = r;
    }
  }
  return best;
}

SweepResult sweep(const ExperimentConfig& cfg, std::span<const double> lrs,
                  std::span<const double> alphas, const ProgressFn& progress) {
  cfg.validate();
  if (lrs.empty()) throw ConfigError("sweep_lr", "at least one value is required");
  if (alphas.empty()) throw ConfigError("sweep_alpha", "at least one value is required");
  SweepResult result;
  std::string csv = "lr,alpha,mean_asymptotic_return,stderr\n";
  char buf[160];
  for (double lr : lrs) {
    for (double alpha : alphas) {
      ExperimentConfig sub = cfg;
      sub.hp.lr = lr;
      sub.hp.alpha = alpha;
      sub.experiment = cfg.experiment + "_lr" + label(lr) + "_alpha" + label(alpha);
      const MetricsLog log = run_training(sub, progress);
      std::vector<double> asym;
      for (std::uint64_t seed : cfg.seeds) asym.push_back(asymptotic_return(log.iterations, seed));
      const SweepRow row{lr, alpha, mean_of(asym), stderr_of(asym)};
      result.rows.push_back(row);
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", row.lr, row.alpha,
                    row.mean_asymptotic_return, row.stderr);
      csv += buf;
    }
  }
  write_text_file(file_in(cfg, "_sweep.csv"), csv);
  result.best = pick_best(result.rows);
  return result;
}

CompareOutputs compare(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const CompareOutputs paths{file_in(cfg, "_compare_metrics.csv"),
                             file_in(cfg, "_compare_eval.csv")};
  std::string metrics = "algorithm," + std::string(kMetricsHeader) + "\n";
  std::string evals = "algorithm," + std::string(kEvalHeader) + "\n";
  Chart train{"training return", "environment steps", "mean episode return", {}};
  Chart test{"testing return (headline policy)", "epsilon_te", "mean return", {}};
  for (Algorithm a : kAllAlgorithms) {
    ExperimentConfig sub = cfg;
    sub.algorithm = a;
    sub.experiment = cfg.experiment + "_" + std::string(to_string(a));
    const MetricsLog log = run_training(sub, progress);
    const std::string name(to_string(a));
    for (const auto& r : log.iterations) metrics += name + "," + format_row(r) + "\n";
    std::map<double, std::vector<double>> test_samples;
    for (const auto& e : log.evals) {
      evals += name + "," + format_row(e) + "\n";
      if (e.worker_id == headline_worker(a)) test_samples[e.epsilon_te].push_back(e.mean_return);
    }
    train.series.push_back(training_series(name, log.iterations));
    test.series.push_back(aggregate_series(name, test_samples));
  }
  write_text_file(paths.metrics, metrics);
  write_text_file(paths.eval, evals);
  write_svg(file_in(cfg, "_train.svg"), train);
  write_svg(file_in(cfg, "_test.svg"), test);
  return paths;
}

std::vector<std::filesystem::path> plot_run(const std::filesystem::path& metrics_csv,
                                            const std::filesystem::path& eval_csv,
                                            const std::filesystem::path& curve_csv,
                                            const std::filesystem::path& out_dir,
                                            const std::string& experiment) {
  std::vector<std::filesystem::path> written;
  auto out = [&](const std::string& chart) { return out_dir / (experiment + "_" + chart + ".svg"); };

  if (!metrics_csv.empty()) {
    const auto rows = parse_metrics_csv(read_text_file(metrics_csv));
    if (rows.empty()) throw StateError(metrics_csv.string() + ": no data rows to plot");
    std::map<int, std::map<double, std::vector<double>>> by_worker;
    for (const auto& r : rows) {
      by_worker[r.worker_id][static_cast<double>(r.env_steps)].push_back(r.mean_episode_return);
    }
    Chart c{experiment + ": training return", "environment steps", "mean episode return", {}};
    for (const auto& [id, samples] : by_worker) c.series.push_back(aggregate_series(worker_label(id), samples));
    write_svg(out("train"), c);
    written.push_back(out("train"));
  }
  if (!eval_csv.empty()) {
    const auto rows = parse_eval_csv(read_text_file(eval_csv));
    if (rows.empty()) throw StateError(eval_csv.string() + ": no data rows to plot");
    std::map<int, std::map<double, std::vector<double>>> by_worker;
    for (const auto& r : rows) by_worker[r.worker_id][r.epsilon_te].push_back(r.mean_return);
    Chart c{experiment + ": testing return", "epsilon_te", "mean return", {}};
    for (const auto& [id, samples] : by_worker) c.series.push_back(aggregate_series(worker_label(id), samples));
    write_svg(out("test"), c);
    written.push_back(out("test"));
  }
  if (!curve_csv.empty()) {
    const auto rows = parse_curve_csv(read_text_file(curve_csv));
    if (rows.empty()) throw StateError(curve_csv.string() + ": no data rows to plot");
    std::map<int, std::map<double, std::vector<double>>> by_worker;
    for (const auto& r : rows) {
      by_worker[r.worker_id][static_cast<double>(r.env_steps)].push_back(r.mean_return);
    }
    Chart c{experiment + ": evaluation return during training", "environment steps",
            "mean return", {}};
    for (const auto& [id, samples] : by_worker) c.series.push_back(aggregate_series(worker_label(id), samples));
    write_svg(out("curve"), c);
    written.push_back(out("curve"));
  }
  if (written.empty()) throw StateError("nothing to plot");
  return written;
}

}  // namespace p2pdrl
