#include "softfin/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace softfin {

ForceWindow::ForceWindow(std::size_t capacity) : cap_(capacity) {
  if (capacity < 2) throw std::logic_error("force window capacity must be >= 2");
  x_.resize(capacity);
  y_.resize(capacity);
}

void ForceWindow::push(double fx, double fy) {
  x_[head_] = fx;
  y_[head_] = fy;
  head_ = (head_ + 1) % cap_;
  if (count_ < cap_) ++count_;
}

void ForceWindow::clear() {
  head_ = 0;
  count_ = 0;
}

double ForceWindow::mean(const std::vector<double>& ring) const {
  // oldest-to-newest accumulation keeps results independent of ring phase
  double s = 0.0;
  const std::size_t start = (head_ + cap_ - count_) % cap_;
  for (std::size_t k = 0; k < count_; ++k) s += ring[(start + k) % cap_];
  return s / double(count_);
}

double ForceWindow::smooth(const std::vector<double>& ring) const {
  const std::size_t start = (head_ + cap_ - count_) % cap_;
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < count_; ++k) {
    const double d = ring[(start + k + 1) % cap_] - ring[(start + k) % cap_];
    s += d * d;
  }
  return std::sqrt(s);
}

double step_reward(const ForceWindow& win, double ref_x, double ref_y, const RewardParams& rp) {
  if (win.size() < 2)
    throw std::logic_error("step_reward: need at least 2 force samples in the window");
  const double ex = std::abs(win.mean_x() - ref_x);
  const double ey = std::abs(win.mean_y() - ref_y);
  return -(rp.w_x * (ex + rp.lambda_x * win.smooth_x()) +
           rp.w_y * (ey + rp.lambda_y * win.smooth_y()));
}

}  // namespace softfin
