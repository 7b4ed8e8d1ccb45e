#include "p2pdrl/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "p2pdrl/checkpoint.hpp"
#include "p2pdrl/config.hpp"
#include "p2pdrl/errors.hpp"
#include "p2pdrl/evaluation.hpp"
#include "p2pdrl/experiment.hpp"
#include "p2pdrl/metrics.hpp"

namespace p2pdrl {

namespace {

constexpr const char* kPrecedence =
    "Settings are applied in order: built-in defaults, then --config FILE, then --set "
    "key=value, then the dedicated flags (--seed, --alpha, ...). Setting the same key "
    "through --set and a dedicated flag is rejected.";

// Flags shared by every subcommand.
struct CommonFlags {
  std::string config_path;
  std::vector<std::string> settings;
  std::vector<std::uint64_t> seeds;
  std::optional<double> alpha;
  std::optional<double> epsilon_tr;
  std::vector<double> epsilon_te;
  std::string algo;
  std::string task;
  std::string out = "results";
  std::string experiment;
  std::optional<std::int64_t> budget;
  bool quiet = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("-c,--config", f.config_path, "key = value config file");
  app->add_option("--set", f.settings, "override one config key (key=value); repeatable");
  app->add_option("--seed", f.seeds, "seed list (comma separated)")->delimiter(',');
  app->add_option("--alpha", f.alpha, "distillation coefficient");
  app->add_option("--epsilon-tr", f.epsilon_tr, "training diversity in [0, 1]");
  app->add_option("--epsilon-te", f.epsilon_te, "testing diversity list (comma separated)")
      ->delimiter(',');
  app->add_option("--algo", f.algo, "p2pdrl | ppo | dppo | distral | dnc");
  app->add_option("--task", f.task, "pendulum | cartpole");
  app->add_option("--out", f.out, "output directory (default ./results)");
  app->add_option("--experiment", f.experiment, "name used as the prefix of every output file");
  app->add_option("--budget", f.budget, "total environment steps per run");
  app->add_flag("-q,--quiet", f.quiet, "no progress lines");
  app->footer(kPrecedence);
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig cfg = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
  std::map<std::string, std::string> set_keys;
  for (const std::string& s : f.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    std::string key = s.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    apply_setting(cfg, key, s.substr(eq + 1));
    set_keys[key] = s.substr(eq + 1);
  }
  auto flag = [&](const char* key, const char* flag_name) {
    if (set_keys.count(key)) {
      throw UsageError(std::string(flag_name) + " conflicts with --set " + key);
    }
  };
  if (!f.seeds.empty()) {
    flag("seeds", "--seed");
    cfg.seeds = f.seeds;
  }
  if (f.alpha) {
    flag("alpha", "--alpha");
    cfg.hp.alpha = *f.alpha;
  }
  if (f.epsilon_tr) {
    flag("epsilon_tr", "--epsilon-tr");
    cfg.epsilon_tr = *f.epsilon_tr;
  }
  if (!f.epsilon_te.empty()) {
    flag("epsilon_te", "--epsilon-te");
    cfg.epsilon_te = f.epsilon_te;
  }
  if (!f.algo.empty()) {
    flag("algorithm", "--algo");
    cfg.algorithm = parse_algorithm(f.algo);
  }
  if (!f.task.empty()) {
    flag("task", "--task");
    cfg.task = f.task;
  }
  if (!f.experiment.empty()) {
    flag("experiment", "--experiment");
    cfg.experiment = f.experiment;
  }
  if (f.budget) {
    flag("total_env_steps", "--budget");
    cfg.total_env_steps = *f.budget;
  }
  // --out always wins: every path is relative to it.
  cfg.output_dir = f.out;
  cfg.validate();
  return cfg;
}

ProgressFn progress_to(std::ostream& err, bool quiet) {
  if (quiet) return {};
  return [&err](const std::string& line) { err << line << '\n'; };
}

int cmd_train(const CommonFlags& f, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = build_config(f);
  run_training(cfg, progress_to(err, f.quiet));
  const RunOutputs paths = output_paths(cfg);
  const auto charts = plot_run(paths.metrics, paths.eval, paths.curve, cfg.output_dir, cfg.experiment);
  out << "metrics: " << paths.metrics.string() << '\n' << "eval: " << paths.eval.string() << '\n';
  if (!paths.curve.empty()) out << "curve: " << paths.curve.string() << '\n';
  for (const auto& c : charts) out << "chart: " << c.string() << '\n';
  return kExitOk;
}

int cmd_eval(const CommonFlags& f, const std::vector<std::string>& checkpoints, int episodes,
             std::ostream& out) {
  ExperimentConfig cfg = build_config(f);
  if (episodes > 0) cfg.eval_episodes = episodes;
  cfg.validate();
  const EnvSpec spec = cfg.env_spec();
  std::vector<EvalRecord> rows;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const ActorParams actor = read_actor(load_checkpoint(checkpoints[i]), "actor");
    if (actor.obs_dim() != spec.obs_dim || actor.action_dim() != spec.action_dim) {
      throw ConfigError("task", checkpoints[i] + " does not match task " + spec.name);
    }
    for (double eps : cfg.epsilon_te) {
      for (std::uint64_t seed : cfg.seeds) {
        Rng rng = eval_stream(Rng(seed));
        const EvalResult r =
            evaluate_policy(actor, spec, eps, cfg.eval_episodes, rng, cfg.stochastic_eval);
        rows.push_back({eps, seed, static_cast<int>(i), r.mean, r.stderr});
      }
    }
  }
  const auto path = cfg.output_dir / (cfg.experiment + "_checkpoint_eval.csv");
  write_text_file(path, eval_csv(rows));
  out << "eval: " << path.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const CommonFlags& f, std::vector<double> lrs, std::vector<double> alphas,
              std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = build_config(f);
  if (lrs.empty()) lrs = cfg.sweep_lr;
  if (alphas.empty()) alphas = cfg.sweep_alpha;
  const SweepResult r = sweep(cfg, lrs, alphas, progress_to(err, f.quiet));
  char line[160];
  std::snprintf(line, sizeof(line), "best: lr=%g alpha=%g mean_asymptotic_return=%.6g", r.best.lr,
                r.best.alpha, r.best.mean_asymptotic_return);
  out << line << '\n';
  return kExitOk;
}

int cmd_diversity(const CommonFlags& f, std::vector<double> grid, std::ostream& out,
                  std::ostream& err) {
  const ExperimentConfig cfg = build_config(f);
  if (grid.empty()) grid = cfg.diversity_grid;
  const double eps_te = f.epsilon_te.empty() ? cfg.diversity_epsilon_te : f.epsilon_te.front();
  const DiversityResult r = train_vs_diversity(cfg, grid, eps_te, progress_to(err, f.quiet));
  for (const auto& s : r.summary) {
    char line[200];
    std::snprintf(line, sizeof(line), "epsilon_tr=%g asymptotic=%.6g test=%.6g", s.epsilon_tr,
                  s.asymptotic_mean, s.test_mean);
    out << line << '\n';
  }
  return kExitOk;
}

int cmd_compare(const CommonFlags& f, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = build_config(f);
  const CompareOutputs paths = compare(cfg, progress_to(err, f.quiet));
  out << "metrics: " << paths.metrics.string() << '\n' << "eval: " << paths.eval.string() << '\n';
  return kExitOk;
}

int cmd_plot(const CommonFlags& f, const std::string& metrics, const std::string& eval,
             const std::string& curve, std::ostream& out) {
  if (metrics.empty() && eval.empty() && curve.empty()) {
    throw UsageError("plot needs at least one of --metrics, --eval, --curve");
  }
  const ExperimentConfig cfg = build_config(f);
  for (const auto& p : plot_run(metrics, eval, curve, cfg.output_dir, cfg.experiment)) {
    out << "chart: " << p.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peer-to-peer distillation RL experiments.\n" + std::string(kPrecedence), "p2pdrl"};
  app.require_subcommand(1, 1);

  CommonFlags flags;
  auto* train = app.add_subcommand("train", "train one algorithm over all seeds");
  add_common(train, flags);

  std::vector<std::string> checkpoints;
  int episodes = 0;
  auto* eval = app.add_subcommand("eval", "evaluate saved actor checkpoints");
  add_common(eval, flags);
  eval->add_option("checkpoints", checkpoints, "checkpoint JSON files")->required();
  eval->add_option("--episodes", episodes, "episodes per evaluation (M)");

  std::vector<double> lr_grid, alpha_grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "learning-rate x alpha grid");
  add_common(sweep_cmd, flags);
  sweep_cmd->add_option("--lr-grid", lr_grid, "learning rates")->delimiter(',');
  sweep_cmd->add_option("--alpha-grid", alpha_grid, "alpha values")->delimiter(',');

  std::vector<double> grid;
  auto* diversity = app.add_subcommand(
      "diversity", "train across an epsilon_tr grid and test at one epsilon_te (first --epsilon-te)");
  add_common(diversity, flags);
  diversity->add_option("--grid", grid, "epsilon_tr values")->delimiter(',');

  auto* compare_cmd = app.add_subcommand("compare", "all five algorithms under one budget");
  add_common(compare_cmd, flags);

  std::string metrics_csv, eval_csv_path, curve_csv_path;
  auto* plot = app.add_subcommand("plot", "SVG charts from existing CSV files");
  add_common(plot, flags);
  plot->add_option("--metrics", metrics_csv, "metrics CSV");
  plot->add_option("--eval", eval_csv_path, "evaluation CSV");
  plot->add_option("--curve", curve_csv_path, "learning-curve evaluation CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  try {
    if (train->parsed()) return cmd_train(flags, out, err);
    if (eval->parsed()) return cmd_eval(flags, checkpoints, episodes, out);
    if (sweep_cmd->parsed()) return cmd_sweep(flags, lr_grid, alpha_grid, out, err);
    if (diversity->parsed()) return cmd_diversity(flags, grid, out, err);
    if (compare_cmd->parsed()) return cmd_compare(flags, out, err);
    if (plot->parsed()) return cmd_plot(flags, metrics_csv, eval_csv_path, curve_csv_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace p2pdrl
