#pragma once

// force-tracking reward. over a trailing window of raw 100 hz force samples,
// each axis contributes its mean tracking error plus a smoothness penalty
// (root of summed squared consecutive differences), weighted per axis:
//
//   r = -sum_d w_d * ( |mean_d - ref_d| + lambda_d * sqrt(sum_i (F_d[i+1]-F_d[i])^2) )
//
// r is always <= 0 and hits 0 exactly on a perfectly tracked constant
// reference. the lambda defaults scale the smoothness term to the sensor
// noise floor: an order of magnitude below the tracking term on random
// rollouts, comparable to the residual tracking error once a controller has
// settled (measurements in docs/reward_calibration.md).

#include <cstddef>
#include <vector>

namespace softfin {

struct RewardParams {
  double w_x = 1.0, w_y = 1.0;
  double lambda_x = 0.05, lambda_y = 0.05;
  std::size_t window = 200;  // evaluation window, raw force samples
};

// trailing per-axis ring of the episode's force stream
class ForceWindow {
 public:
  explicit ForceWindow(std::size_t capacity);
  void push(double fx, double fy);
  void clear();
  std::size_t size() const { return count_; }

  double mean_x() const { return mean(x_); }
  double mean_y() const { return mean(y_); }
  double smooth_x() const { return smooth(x_); }
  double smooth_y() const { return smooth(y_); }

 private:
  double mean(const std::vector<double>& ring) const;
  double smooth(const std::vector<double>& ring) const;
  std::vector<double> x_, y_;
  std::size_t cap_, head_ = 0, count_ = 0;
};

// needs at least 2 samples in the window (one consecutive difference)
double step_reward(const ForceWindow& win, double ref_x, double ref_y, const RewardParams& rp);

}  // namespace softfin
