#pragma once

// series metrics used for surrogate fidelity reporting and controller
// evaluation: rmse / mae (1- and 2-channel), classic dynamic-time-warping
// with optional sakoe-chiba band, and a trailing moving average.

#include <cstddef>
#include <vector>

namespace softfin::metrics {

double rmse(const std::vector<double>& a, const std::vector<double>& b);
double mae(const std::vector<double>& a, const std::vector<double>& b);

// 2-channel variants score per-sample euclidean error
double rmse2(const std::vector<double>& ax, const std::vector<double>& ay,
             const std::vector<double>& bx, const std::vector<double>& by);
double mae2(const std::vector<double>& ax, const std::vector<double>& ay,
            const std::vector<double>& bx, const std::vector<double>& by);

struct DtwResult {
  double cost = 0.0;           // summed per-cell distance along the optimal path
  std::size_t path_len = 0;    // cells on that path
  double normalized = 0.0;     // cost / path_len
};

// full O(n*m) dynamic program; ties resolved lexicographically on
// (cost, path_len) so the normalization is well defined. band > 0 restricts
// |i - j| to the band (widened automatically to keep the corner reachable).
DtwResult dtw(const std::vector<double>& a, const std::vector<double>& b, std::size_t band = 0);
DtwResult dtw2(const std::vector<double>& ax, const std::vector<double>& ay,
               const std::vector<double>& bx, const std::vector<double>& by,
               std::size_t band = 0);

// out[i] = mean(a[max(0, i-n+1) .. i]) — trailing window with partial prefix
std::vector<double> moving_average(const std::vector<double>& a, std::size_t n);

}  // namespace softfin::metrics
