#pragma once

// the learned stand-in for the plant, built in two stages: posnet maps a
// window of (command angle, command speed, previous angle) to the next base
// angle, forcenet maps a window of (angle, angular rate) to the planar force
// at the window's end. composed autoregressively they form a closed 100 hz
// simulator that never touches the plant.

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "softfin/config.hpp"
#include "softfin/datagen.hpp"
#include "softfin/nn.hpp"
#include "softfin/plant.hpp"
#include "softfin/tensor.hpp"

namespace softfin {

// per-channel standardization constants, frozen from the train split
struct NormStats {
  std::vector<double> mean, stddev;  // stddev strictly positive
};

// stats over the `channel_dim` axis of x (population std; throws on zero
// spread or non-finite input)
NormStats compute_stats(const Tensor& x, std::size_t channel_dim);
void normalize(Tensor& x, const NormStats& s, std::size_t channel_dim);
void denormalize(Tensor& x, const NormStats& s, std::size_t channel_dim);

// conv1d(3->16,k5) / relu / conv1d(16->32,k5) / relu / flatten /
// linear(->64) / relu / linear(64->32) / relu / linear(32->1)
nn::Network make_posnet(std::size_t window);
// lstm(2->96) / linear(96->64) / relu / linear(64->32) / relu /
// dropout(0.2) / linear(32->2)
nn::Network make_forcenet();

struct SurrogateModel {
  nn::Network posnet, forcenet;
  std::size_t window = 100;  // input window, ticks
  double dt = 0.01;          // tick period the model was trained at, s
  NormStats pos_in, pos_out, force_in, force_out;
};

// windowed supervised pairs in raw physical units.
// posnet:   inputs [N, 3, W] (cmd_angle, cmd_omega, prev theta), targets [N, 1]
// forcenet: inputs [N, W, 2] (theta, omega by backward difference), targets [N, 2]
struct WindowDataset {
  Tensor inputs, targets;
};

WindowDataset make_posnet_dataset(const std::vector<LogData>& logs, std::size_t window,
                                  std::size_t stride);
WindowDataset make_forcenet_dataset(const std::vector<LogData>& logs, std::size_t window,
                                    std::size_t stride, double dt);

struct TrainOpts {
  std::size_t batch = 64;
  double lr = 1e-3;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  double holdout = 0.1;     // fraction held out for early stopping; 0 disables
  std::uint64_t seed = 0;   // shuffling + dropout streams
};

struct TrainCurve {
  std::vector<double> train_mse, val_mse;  // per epoch, normalized units
  std::size_t best_epoch = 0;
};

// minibatch mse regression on an already-initialized net: seeded shuffling,
// holdout early stopping with best-weight restore, divergence abort (loss
// non-finite or > 10x the first epoch's)
TrainCurve train_regression(nn::Network& net, const Tensor& inputs, const Tensor& targets,
                            const TrainOpts& opts);

struct SurrogateTraining {
  TrainCurve posnet, forcenet;
};

// assembles datasets from the train logs, freezes normalization, initializes
// and trains both nets from seeds derived off `seed`
SurrogateModel train_surrogate(const std::vector<LogData>& train_logs, const Config& cfg,
                               std::uint64_t seed, SurrogateTraining* curves = nullptr);

// single-window inference in physical units (eval mode, deterministic).
// throws on wrong shape or non-finite input.
double posnet_step(const SurrogateModel& m, const Tensor& window);                        // [3, W]
std::pair<double, double> forcenet_step(const SurrogateModel& m, const Tensor& window);   // [W, 2]
Tensor forcenet_batch(const SurrogateModel& m, const Tensor& windows);  // [B, W, 2] -> [B, 2]

// closed-loop 100 hz simulator. tick() rolls the angle forward one step;
// flush_forces() evaluates the force windows for every tick since the last
// flush in one batch (per-tick semantics, batched for throughput).
class SurrogateSim {
 public:
  explicit SurrogateSim(const SurrogateModel& model);
  void reset();
  double theta() const { return ticks_ ? theta_hist_.back() : 0.0; }
  void tick(const MotorCommand& cmd);
  void flush_forces(std::vector<ForceSample>& out);  // appends, oldest first
  std::size_t ticks() const { return ticks_; }
  const std::vector<double>& theta_history() const { return theta_hist_; }

 private:
  double hist(const std::vector<double>& v, std::ptrdiff_t t, double pad) const;
  const SurrogateModel* model_;
  std::vector<double> cmd_angle_, cmd_omega_, theta_hist_, omega_hist_;
  std::size_t ticks_ = 0;    // rows in the histories
  std::size_t flushed_ = 0;  // ticks whose force was already emitted
};

struct RolloutSeries {
  std::vector<double> theta, fx, fy;
};

// open-loop rollout of a per-tick command stream (cmds.size() >= n_ticks)
RolloutSeries surrogate_rollout(const SurrogateModel& m, const std::vector<MotorCommand>& cmds,
                                std::size_t n_ticks);

struct MetricsRow {
  double rmse = 0.0, mae = 0.0, dtw = 0.0;  // dtw is path-length normalized
};

MetricsRow series_metrics(const std::vector<double>& pred, const std::vector<double>& truth);

struct SurrogateEval {
  MetricsRow posnet, force_x, force_y;   // averaged over test logs
  double posnet_r2 = 0.0;                // pooled over all test windows
  double force_rmse_x = 0.0, force_rmse_y = 0.0;  // pooled
  double force_std_x = 0.0, force_std_y = 0.0;    // signal std of the targets
};

// teacher-forced evaluation on held-out logs (each >= window+1 rows)
SurrogateEval evaluate_surrogate(const SurrogateModel& m, const std::vector<LogData>& test_logs);

// metrics.csv: model,params,RMSE,MAE,DTW with one row per predictor
void write_metrics_table(const std::filesystem::path& path, const SurrogateModel& m,
                         const SurrogateEval& e);

void save_surrogate(const SurrogateModel& m, const std::filesystem::path& path);
SurrogateModel load_surrogate(const std::filesystem::path& path);

}  // namespace softfin
