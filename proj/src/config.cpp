#include "safeadapt/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "safeadapt/checkpoint.hpp"

namespace safeadapt {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_integer(const std::string& value, const std::string& key) {
  T out{};
  const std::string v = trim(value);
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("config: key '" + key + "' expects an integer, got '" +
                      value + "'");
  return out;
}

double parse_real(const std::string& value, const std::string& key) {
  try {
    return parse_double(trim(value));
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" +
                      value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  const std::string v = trim(value);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" +
                    value + "'");
}

struct KeyBinding {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<KeyBinding>& bindings() {
  static const std::vector<KeyBinding> table = [] {
    std::vector<KeyBinding> t;
    auto add = [&t](std::string key, auto setter, auto getter) {
      t.push_back({std::move(key), setter, getter});
    };

    add("game.name",
        [](ExperimentConfig& c, const std::string& v) { c.game.name = trim(v); },
        [](const ExperimentConfig& c) { return c.game.name; });
    add("game.grid_rows",
        [](ExperimentConfig& c, const std::string& v) {
          c.game.grid_rows = parse_integer<int>(v, "game.grid_rows");
        },
        [](const ExperimentConfig& c) { return std::to_string(c.game.grid_rows); });
    add("game.grid_cols",
        [](ExperimentConfig& c, const std::string& v) {
          c.game.grid_cols = parse_integer<int>(v, "game.grid_cols");
        },
        [](const ExperimentConfig& c) { return std::to_string(c.game.grid_cols); });
    add("game.horizon",
        [](ExperimentConfig& c, const std::string& v) {
          c.game.horizon = parse_integer<int>(v, "game.horizon");
        },
        [](const ExperimentConfig& c) { return std::to_string(c.game.horizon); });
    add("game.discount",
        [](ExperimentConfig& c, const std::string& v) {
          c.game.discount = parse_real(v, "game.discount");
        },
        [](const ExperimentConfig& c) { return format_double(c.game.discount); });
    add("game.matrix_rounds",
        [](ExperimentConfig& c, const std::string& v) {
          c.game.matrix_rounds = parse_integer<int>(v, "game.matrix_rounds");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.game.matrix_rounds);
        });

    add("net.hidden_units",
        [](ExperimentConfig& c, const std::string& v) {
          c.protocol.hidden_units = parse_integer<int>(v, "net.hidden_units");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.protocol.hidden_units);
        });

    add("ppo.batch_size",
        [](ExperimentConfig& c, const std::string& v) {
          c.ppo.batch_size = parse_integer<int>(v, "ppo.batch_size");
        },
        [](const ExperimentConfig& c) { return std::to_string(c.ppo.batch_size); });
    add("ppo.minibatch_size",
        [](ExperimentConfig& c, const std::string& v) {
          c.ppo.minibatch_size = parse_integer<int>(v, "ppo.minibatch_size");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.ppo.minibatch_size);
        });
    add("ppo.epochs_per_batch",
        [](ExperimentConfig& c, const std::string& v) {
          c.ppo.epochs_per_batch = parse_integer<int>(v, "ppo.epochs_per_batch");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.ppo.epochs_per_batch);
        });
    add("ppo.clip_epsilon",
        [](ExperimentConfig& c, const std::string& v) {
          c.ppo.clip_epsilon = parse_real(v, "ppo.clip_epsilon");
        },
        [](const ExperimentConfig& c) { return format_double(c.ppo.clip_epsilon); });
    add("ppo.learning_rate",
        [](ExperimentConfig& c, const std::string& v) {
          c.ppo.learning_rate = parse_real(v, "ppo.learning_rate");
        },
        [](const ExperimentConfig& c) {
          return format_double(c.ppo.learning_rate);
        });
    add("ppo.gae_lambda",
        [](ExperimentConfig& c, const std::string& v) {
          c.ppo.gae_lambda = parse_real(v, "ppo.gae_lambda");
        },
        [](const ExperimentConfig& c) { return format_double(c.ppo.gae_lambda); });
    add("ppo.value_loss_coef",
        [](ExperimentConfig& c, const std::string& v) {
          c.ppo.value_loss_coef = parse_real(v, "ppo.value_loss_coef");
        },
        [](const ExperimentConfig& c) {
          return format_double(c.ppo.value_loss_coef);
        });

    add("adapt.lambda1",
        [](ExperimentConfig& c, const std::string& v) {
          c.adapt.lambda1 = parse_real(v, "adapt.lambda1");
        },
        [](const ExperimentConfig& c) { return format_double(c.adapt.lambda1); });
    add("adapt.lambda2",
        [](ExperimentConfig& c, const std::string& v) {
          c.adapt.lambda2 = parse_real(v, "adapt.lambda2");
        },
        [](const ExperimentConfig& c) { return format_double(c.adapt.lambda2); });
    add("adapt.disc_updates_per_iter",
        [](ExperimentConfig& c, const std::string& v) {
          c.adapt.disc_updates_per_iter =
              parse_integer<int>(v, "adapt.disc_updates_per_iter");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.adapt.disc_updates_per_iter);
        });
    add("adapt.bc_minibatch",
        [](ExperimentConfig& c, const std::string& v) {
          c.adapt.bc_minibatch = parse_integer<int>(v, "adapt.bc_minibatch");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.adapt.bc_minibatch);
        });
    add("adapt.disc_learning_rate",
        [](ExperimentConfig& c, const std::string& v) {
          c.adapt.disc_learning_rate = parse_real(v, "adapt.disc_learning_rate");
        },
        [](const ExperimentConfig& c) {
          return format_double(c.adapt.disc_learning_rate);
        });

    add("protocol.ensemble_size",
        [](ExperimentConfig& c, const std::string& v) {
          c.protocol.ensemble_size =
              parse_integer<int>(v, "protocol.ensemble_size");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.protocol.ensemble_size);
        });
    add("protocol.k1",
        [](ExperimentConfig& c, const std::string& v) {
          c.protocol.k1 = parse_integer<int>(v, "protocol.k1");
        },
        [](const ExperimentConfig& c) { return std::to_string(c.protocol.k1); });
    add("protocol.k2",
        [](ExperimentConfig& c, const std::string& v) {
          c.protocol.k2 = parse_integer<int>(v, "protocol.k2");
        },
        [](const ExperimentConfig& c) { return std::to_string(c.protocol.k2); });
    add("protocol.k3",
        [](ExperimentConfig& c, const std::string& v) {
          c.protocol.k3 = parse_integer<int>(v, "protocol.k3");
        },
        [](const ExperimentConfig& c) { return std::to_string(c.protocol.k3); });
    add("protocol.adaptation_episodes",
        [](ExperimentConfig& c, const std::string& v) {
          c.protocol.adaptation_episodes =
              parse_integer<int>(v, "protocol.adaptation_episodes");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.protocol.adaptation_episodes);
        });
    add("protocol.setting",
        [](ExperimentConfig& c, const std::string& v) {
          try {
            c.protocol.setting = setting_from_string(trim(v));
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
          }
        },
        [](const ExperimentConfig& c) { return to_string(c.protocol.setting); });
    add("protocol.eval_episodes",
        [](ExperimentConfig& c, const std::string& v) {
          c.protocol.eval_episodes =
              parse_integer<int>(v, "protocol.eval_episodes");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.protocol.eval_episodes);
        });
    add("protocol.master_seed",
        [](ExperimentConfig& c, const std::string& v) {
          c.protocol.master_seed =
              parse_integer<std::uint64_t>(v, "protocol.master_seed");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.protocol.master_seed);
        });

    add("eval.discounted",
        [](ExperimentConfig& c, const std::string& v) {
          c.eval.discounted = parse_bool(v, "eval.discounted");
        },
        [](const ExperimentConfig& c) {
          return c.eval.discounted ? std::string("true") : std::string("false");
        });

    add("run.out_dir",
        [](ExperimentConfig& c, const std::string& v) { c.run.out_dir = trim(v); },
        [](const ExperimentConfig& c) { return c.run.out_dir; });
    add("run.checkpoint_interval",
        [](ExperimentConfig& c, const std::string& v) {
          c.run.checkpoint_interval =
              parse_integer<int>(v, "run.checkpoint_interval");
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.run.checkpoint_interval);
        });
    return t;
  }();
  return table;
}

void set_key(ExperimentConfig& cfg, const std::string& key,
             const std::string& value, const std::string& origin) {
  for (const KeyBinding& b : bindings())
    if (b.key == key) {
      b.set(cfg, value);
      return;
    }
  throw ConfigError(origin + ": unknown config key '" + key + "'");
}

}  // namespace

void apply_config_text(ExperimentConfig& cfg, const std::string& text,
                       const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(where + ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    set_key(cfg, full, value, where);
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg;
  apply_config_text(cfg, buf.str(), path);
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment +
                      "' must have the form section.key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  set_key(cfg, key, value, "--set " + assignment);
}

std::vector<std::pair<std::string, std::string>> serialize_config(
    const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const KeyBinding& b : bindings()) {
    if (b.key == "run.out_dir") continue;
    out.emplace_back(b.key, b.get(cfg));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string config_key_reference() {
  ExperimentConfig defaults;
  std::ostringstream os;
  for (const KeyBinding& b : bindings())
    os << b.key << " = " << b.get(defaults) << "\n";
  return os.str();
}

std::unique_ptr<Game> make_game(const GameConfig& cfg) {
  try {
    return make_game(cfg.name, cfg.grid_rows, cfg.grid_cols, cfg.horizon,
                     cfg.discount, cfg.matrix_rounds);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace safeadapt
