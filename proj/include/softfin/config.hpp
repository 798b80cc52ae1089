#pragma once

// one flat configuration for the whole pipeline, parsed from `key = value`
// files with # comments. every key maps onto a named field here; unknown keys
// are hard errors so typos can't silently run the defaults. defaults are the
// desk-scale experiment.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "softfin/plant.hpp"
#include "softfin/reward.hpp"

namespace softfin {

struct Config {
  // dataset collection: random walk excitation on the plant
  std::size_t train_logs = 20;
  std::size_t test_logs = 3;
  std::size_t log_ticks = 2000;
  double reissue_tol = 0.01;     // rad: draw a new command once the base is this close
  double reissue_timeout = 3.0;  // s: ... or after holding one command this long

  PlantParams plant;

  // surrogate training
  std::size_t window = 100;  // input window, ticks
  std::size_t surrogate_batch = 64;
  double surrogate_lr = 1e-3;
  std::size_t surrogate_max_epochs = 50;
  std::size_t surrogate_patience = 5;
  double surrogate_holdout = 0.1;
  std::size_t posnet_stride = 2;   // window subsampling stride over the logs
  std::size_t forcenet_stride = 4;

  // controller training (ppo)
  std::size_t single_steps = 30000;  // control steps, single-reference run
  std::size_t grid_steps = 10000;    // control steps per grid point
  std::size_t horizon = 256;
  std::size_t minibatch = 64;
  std::size_t ppo_epochs = 4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double policy_lr = 3e-4;
  double entropy_coef = 0.005;
  double value_coef = 0.5;
  double kl_stop = 0.5;
  std::size_t episode_steps = 128;   // training episode length, control steps
  std::size_t action_history = 4;    // k previous actions in the observation

  RewardParams reward;

  // reference force ranges (training draws and grid coverage), N
  double ref_x_lo = 0.0, ref_x_hi = 3.0;
  double ref_y_lo = -1.0, ref_y_hi = 1.0;

  // evaluation
  std::size_t eval_steps = 90;  // control steps = 30 s at 3 hz over 100 hz
  std::size_t eval_seeds = 3;

  void set(const std::string& key, const std::string& value);  // throws on unknown key
  void apply_file(const std::filesystem::path& path);
  static Config from_file(const std::filesystem::path& path);

  // (key, current value) pairs in declaration order — docs and dumps
  std::vector<std::pair<std::string, std::string>> items() const;
};

}  // namespace softfin
