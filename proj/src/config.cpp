#include "softfin/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace softfin {

namespace {

struct Entry {
  const char* key;
  enum Kind { F64, U64 } kind;
  void* p;
};

std::vector<Entry> registry(Config& c) {
  return {
      {"train_logs", Entry::U64, &c.train_logs},
      {"test_logs", Entry::U64, &c.test_logs},
      {"log_ticks", Entry::U64, &c.log_ticks},
      {"reissue_tol", Entry::F64, &c.reissue_tol},
      {"reissue_timeout", Entry::F64, &c.reissue_timeout},
      {"plant.dt", Entry::F64, &c.plant.dt},
      {"plant.a_max", Entry::F64, &c.plant.a_max},
      {"plant.tau", Entry::F64, &c.plant.tau},
      {"plant.c_n", Entry::F64, &c.plant.c_n},
      {"plant.c_a", Entry::F64, &c.plant.c_a},
      {"plant.sigma", Entry::F64, &c.plant.sigma},
      {"window", Entry::U64, &c.window},
      {"surrogate_batch", Entry::U64, &c.surrogate_batch},
      {"surrogate_lr", Entry::F64, &c.surrogate_lr},
      {"surrogate_max_epochs", Entry::U64, &c.surrogate_max_epochs},
      {"surrogate_patience", Entry::U64, &c.surrogate_patience},
      {"surrogate_holdout", Entry::F64, &c.surrogate_holdout},
      {"posnet_stride", Entry::U64, &c.posnet_stride},
      {"forcenet_stride", Entry::U64, &c.forcenet_stride},
      {"single_steps", Entry::U64, &c.single_steps},
      {"grid_steps", Entry::U64, &c.grid_steps},
      {"horizon", Entry::U64, &c.horizon},
      {"minibatch", Entry::U64, &c.minibatch},
      {"ppo_epochs", Entry::U64, &c.ppo_epochs},
      {"gamma", Entry::F64, &c.gamma},
      {"gae_lambda", Entry::F64, &c.gae_lambda},
      {"clip_eps", Entry::F64, &c.clip_eps},
      {"policy_lr", Entry::F64, &c.policy_lr},
      {"entropy_coef", Entry::F64, &c.entropy_coef},
      {"value_coef", Entry::F64, &c.value_coef},
      {"kl_stop", Entry::F64, &c.kl_stop},
      {"episode_steps", Entry::U64, &c.episode_steps},
      {"action_history", Entry::U64, &c.action_history},
      {"reward.w_x", Entry::F64, &c.reward.w_x},
      {"reward.w_y", Entry::F64, &c.reward.w_y},
      {"reward.lambda_x", Entry::F64, &c.reward.lambda_x},
      {"reward.lambda_y", Entry::F64, &c.reward.lambda_y},
      {"reward.window", Entry::U64, &c.reward.window},
      {"ref_x_lo", Entry::F64, &c.ref_x_lo},
      {"ref_x_hi", Entry::F64, &c.ref_x_hi},
      {"ref_y_lo", Entry::F64, &c.ref_y_lo},
      {"ref_y_hi", Entry::F64, &c.ref_y_hi},
      {"eval_steps", Entry::U64, &c.eval_steps},
      {"eval_seeds", Entry::U64, &c.eval_seeds},
  };
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  for (const auto& e : registry(*this)) {
    if (key != e.key) continue;
    char* end = nullptr;
    if (e.kind == Entry::F64) {
      const double v = std::strtod(value.c_str(), &end);
      if (end == value.c_str() || *end != '\0')
        throw std::runtime_error("config: bad value '" + value + "' for " + key);
      *static_cast<double*>(e.p) = v;
    } else {
      const long long v = std::strtoll(value.c_str(), &end, 10);
      if (end == value.c_str() || *end != '\0' || v < 0)
        throw std::runtime_error("config: bad value '" + value + "' for " + key);
      *static_cast<std::size_t*>(e.p) = static_cast<std::size_t>(v);
    }
    return;
  }
  throw std::runtime_error("config: unknown key '" + key + "'");
}

void Config::apply_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: " + path.string() + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

Config Config::from_file(const std::filesystem::path& path) {
  Config c;
  c.apply_file(path);
  return c;
}

std::vector<std::pair<std::string, std::string>> Config::items() const {
  std::vector<std::pair<std::string, std::string>> out;
  char buf[32];
  for (const auto& e : registry(const_cast<Config&>(*this))) {
    if (e.kind == Entry::F64) {
      std::snprintf(buf, sizeof(buf), "%.17g", *static_cast<const double*>(e.p));
      out.emplace_back(e.key, buf);
    } else {
      out.emplace_back(e.key, std::to_string(*static_cast<const std::size_t*>(e.p)));
    }
  }
  return out;
}

}  // namespace softfin
