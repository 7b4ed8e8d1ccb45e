#include "p2pdrl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "p2pdrl/errors.hpp"

namespace p2pdrl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(std::string(key), "expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

template <class Int>
Int to_int(std::string_view key, std::string_view text) {
  text = trim(text);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key), "expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

bool to_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(std::string(key), "expected true or false, got '" + std::string(text) + "'");
}

template <class T, class Parse>
std::vector<T> to_list(std::string_view key, std::string_view text, Parse parse) {
  std::vector<T> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(parse(key, text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <class T, class Fmt>
std::string join(const std::vector<T>& xs, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += fmt(xs[i]);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define P2PDRL_DOUBLE_FIELD(name, member)                                                   \
  Field {                                                                                    \
    name, [](ExperimentConfig& c, std::string_view k, std::string_view v) {                 \
      c.member = to_double(k, v);                                                            \
    },                                                                                       \
        [](const ExperimentConfig& c) { return num(c.member); }                             \
  }
#define P2PDRL_INT_FIELD(name, member)                                                      \
  Field {                                                                                    \
    name, [](ExperimentConfig& c, std::string_view k, std::string_view v) {                 \
      c.member = to_int<decltype(c.member)>(k, v);                                           \
    },                                                                                       \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }                  \
  }
#define P2PDRL_BOOL_FIELD(name, member)                                                     \
  Field {                                                                                    \
    name, [](ExperimentConfig& c, std::string_view k, std::string_view v) {                 \
      c.member = to_bool(k, v);                                                              \
    },                                                                                       \
        [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }  \
  }
#define P2PDRL_LIST_FIELD(name, member)                                                     \
  Field {                                                                                    \
    name, [](ExperimentConfig& c, std::string_view k, std::string_view v) {                 \
      c.member = to_list<double>(k, v, to_double);                                           \
    },                                                                                       \
        [](const ExperimentConfig& c) { return join(c.member, num); }                       \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"experiment",
       [](ExperimentConfig& c, std::string_view, std::string_view v) { c.experiment = trim(v); },
       [](const ExperimentConfig& c) { return c.experiment; }},
      {"algorithm",
       [](ExperimentConfig& c, std::string_view, std::string_view v) {
         c.algorithm = parse_algorithm(trim(v));
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.algorithm)); }},
      {"task",
       [](ExperimentConfig& c, std::string_view, std::string_view v) {
         c.task = trim(v);
         make_env_spec(c.task);
       },
       [](const ExperimentConfig& c) { return c.task; }},
      P2PDRL_DOUBLE_FIELD("epsilon_tr", epsilon_tr),
      P2PDRL_LIST_FIELD("epsilon_te", epsilon_te),
      {"partition",
       [](ExperimentConfig& c, std::string_view, std::string_view v) {
         c.partition = parse_wind_partition(trim(v));
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.partition)); }},
      P2PDRL_INT_FIELD("total_env_steps", total_env_steps),
      {"seeds",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.seeds = to_list<std::uint64_t>(k, v, to_int<std::uint64_t>);
       },
       [](const ExperimentConfig& c) {
         return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
       }},
      P2PDRL_INT_FIELD("eval_episodes", eval_episodes),
      P2PDRL_INT_FIELD("eval_every", eval_every),
      P2PDRL_DOUBLE_FIELD("curve_epsilon_te", curve_epsilon_te),
      P2PDRL_BOOL_FIELD("stochastic_eval", stochastic_eval),
      P2PDRL_BOOL_FIELD("save_checkpoints", save_checkpoints),
      {"output_dir",
       [](ExperimentConfig& c, std::string_view, std::string_view v) {
         c.output_dir = std::string(trim(v));
       },
       [](const ExperimentConfig& c) { return c.output_dir.string(); }},
      P2PDRL_LIST_FIELD("sweep_lr", sweep_lr),
      P2PDRL_LIST_FIELD("sweep_alpha", sweep_alpha),
      P2PDRL_LIST_FIELD("diversity_grid", diversity_grid),
      P2PDRL_DOUBLE_FIELD("diversity_epsilon_te", diversity_epsilon_te),
      P2PDRL_DOUBLE_FIELD("gamma", hp.gamma),
      P2PDRL_DOUBLE_FIELD("gae_lambda", hp.gae_lambda),
      P2PDRL_DOUBLE_FIELD("clip_eps", hp.clip_eps),
      P2PDRL_DOUBLE_FIELD("alpha", hp.alpha),
      P2PDRL_DOUBLE_FIELD("lr", hp.lr),
      P2PDRL_INT_FIELD("workers", hp.workers),
      P2PDRL_INT_FIELD("steps_per_worker", hp.steps_per_worker),
      P2PDRL_INT_FIELD("epochs", hp.epochs),
      P2PDRL_INT_FIELD("minibatch", hp.minibatch),
      P2PDRL_INT_FIELD("dnc_period", hp.dnc_period),
      P2PDRL_BOOL_FIELD("normalize_advantages", hp.normalize_advantages),
      P2PDRL_BOOL_FIELD("snapshot_per_epoch", hp.snapshot_per_epoch),
      P2PDRL_BOOL_FIELD("resample_per_episode", hp.resample_per_episode),
      P2PDRL_BOOL_FIELD("bootstrap_time_limit", hp.bootstrap_time_limit),
      P2PDRL_BOOL_FIELD("log_grad_variance", hp.log_grad_variance),
      P2PDRL_DOUBLE_FIELD("entropy_coef", hp.entropy_coef),
      P2PDRL_DOUBLE_FIELD("value_clip", hp.value_clip),
      P2PDRL_DOUBLE_FIELD("max_grad_norm", hp.max_grad_norm),
  };
  return table;
}

#undef P2PDRL_DOUBLE_FIELD
#undef P2PDRL_INT_FIELD
#undef P2PDRL_BOOL_FIELD
#undef P2PDRL_LIST_FIELD

void require_unit_interval(const char* key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(key, "must lie in [0, 1], got " + num(v));
  }
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kP2pdrl: return "p2pdrl";
    case Algorithm::kPpo: return "ppo";
    case Algorithm::kDppo: return "dppo";
    case Algorithm::kDistral: return "distral";
    case Algorithm::kDnc: return "dnc";
  }
  return "p2pdrl";
}

Algorithm parse_algorithm(std::string_view text) {
  for (Algorithm a : kAllAlgorithms) {
    if (to_string(a) == text) return a;
  }
  throw ConfigError("algorithm", "unknown algorithm '" + std::string(text) +
                                     "' (p2pdrl|ppo|dppo|distral|dnc)");
}

int ExperimentConfig::iterations() const {
  const std::int64_t per_iter =
      static_cast<std::int64_t>(hp.workers) * static_cast<std::int64_t>(hp.steps_per_worker);
  return static_cast<int>(total_env_steps / per_iter);
}

EnvSpec ExperimentConfig::env_spec() const { return make_env_spec(task); }

RandomizationConfig ExperimentConfig::train_randomization() const {
  return {epsilon_tr, env_spec().nominal, partition};
}

void ExperimentConfig::validate() const {
  if (experiment.empty() || experiment.find_first_of("/\\ ") != std::string::npos) {
    throw ConfigError("experiment", "must be a non-empty name without spaces or slashes");
  }
  make_env_spec(task);
  hp.validate();
  require_unit_interval("epsilon_tr", epsilon_tr);
  for (double e : epsilon_te) require_unit_interval("epsilon_te", e);
  require_unit_interval("curve_epsilon_te", curve_epsilon_te);
  require_unit_interval("diversity_epsilon_te", diversity_epsilon_te);
  for (double e : diversity_grid) require_unit_interval("diversity_grid", e);
  const std::int64_t per_iter =
      static_cast<std::int64_t>(hp.workers) * static_cast<std::int64_t>(hp.steps_per_worker);
  if (total_env_steps <= 0 || total_env_steps % per_iter != 0) {
    throw ConfigError("total_env_steps", "must be a positive multiple of workers * steps_per_worker (" +
                                             std::to_string(per_iter) + ")");
  }
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  if (eval_episodes < 1) throw ConfigError("eval_episodes", "must be >= 1");
  if (eval_every < 0) throw ConfigError("eval_every", "must be >= 0");
  if (epsilon_te.empty()) throw ConfigError("epsilon_te", "at least one value is required");
  for (double lr : sweep_lr) {
    if (!(lr >= 0.0)) throw ConfigError("sweep_lr", "learning rates must be >= 0");
  }
  for (double a : sweep_alpha) {
    if (!(a >= 0.0)) throw ConfigError("sweep_alpha", "alpha values must be >= 0");
  }
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(cfg, key, value);
      return;
    }
  }
  throw ConfigError(std::string(key), "unknown configuration key");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? text.npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(line), "line " + std::to_string(line_no) +
                                               " is not of the form key = value");
    }
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace p2pdrl
