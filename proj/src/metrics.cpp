#include "softfin/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace softfin::metrics {

namespace {

void require_same_nonempty(std::size_t na, std::size_t nb) {
  if (na == 0 || nb == 0) throw std::logic_error("metric: empty series");
  if (na != nb) throw std::logic_error("metric: length mismatch " + std::to_string(na) + " vs " +
                                       std::to_string(nb));
}

struct Cell {
  double cost;
  std::size_t len;
};

inline bool better(const Cell& a, const Cell& b) {
  return a.cost < b.cost || (a.cost == b.cost && a.len < b.len);
}

// generic dp over a distance functional d(i, j)
template <typename Dist>
DtwResult dtw_impl(std::size_t n, std::size_t m, std::size_t band, Dist d) {
  if (n == 0 || m == 0) throw std::logic_error("dtw: empty series");
  const std::size_t diff = n > m ? n - m : m - n;
  const std::size_t eff_band = band == 0 ? 0 : std::max(band, diff);
  const double inf = std::numeric_limits<double>::infinity();
  const Cell unreachable{inf, 0};

  std::vector<Cell> prev(m), cur(m);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j_lo = 0, j_hi = m;  // [lo, hi)
    if (eff_band != 0) {
      j_lo = i > eff_band ? i - eff_band : 0;
      j_hi = std::min(m, i + eff_band + 1);
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (j < j_lo || j >= j_hi) {
        cur[j] = unreachable;
        continue;
      }
      Cell best = unreachable;
      if (i == 0 && j == 0) {
        best = Cell{0.0, 0};
      } else {
        if (i > 0 && better(prev[j], best)) best = prev[j];
        if (j > 0 && better(cur[j - 1], best)) best = cur[j - 1];
        if (i > 0 && j > 0 && better(prev[j - 1], best)) best = prev[j - 1];
      }
      cur[j] = Cell{best.cost + d(i, j), best.len + 1};
    }
    std::swap(prev, cur);
  }
  const Cell& corner = prev[m - 1];
  if (!std::isfinite(corner.cost)) throw std::logic_error("dtw: band leaves corner unreachable");
  return DtwResult{corner.cost, corner.len, corner.cost / double(corner.len)};
}

}  // namespace

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  require_same_nonempty(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / double(a.size()));
}

double mae(const std::vector<double>& a, const std::vector<double>& b) {
  require_same_nonempty(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / double(a.size());
}

double rmse2(const std::vector<double>& ax, const std::vector<double>& ay,
             const std::vector<double>& bx, const std::vector<double>& by) {
  require_same_nonempty(ax.size(), bx.size());
  require_same_nonempty(ay.size(), by.size());
  require_same_nonempty(ax.size(), ay.size());
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const double dx = ax[i] - bx[i], dy = ay[i] - by[i];
    s += dx * dx + dy * dy;
  }
  return std::sqrt(s / double(ax.size()));
}

double mae2(const std::vector<double>& ax, const std::vector<double>& ay,
            const std::vector<double>& bx, const std::vector<double>& by) {
  require_same_nonempty(ax.size(), bx.size());
  require_same_nonempty(ay.size(), by.size());
  require_same_nonempty(ax.size(), ay.size());
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i)
    s += std::hypot(ax[i] - bx[i], ay[i] - by[i]);
  return s / double(ax.size());
}

DtwResult dtw(const std::vector<double>& a, const std::vector<double>& b, std::size_t band) {
  return dtw_impl(a.size(), b.size(), band,
                  [&](std::size_t i, std::size_t j) { return std::abs(a[i] - b[j]); });
}

DtwResult dtw2(const std::vector<double>& ax, const std::vector<double>& ay,
               const std::vector<double>& bx, const std::vector<double>& by, std::size_t band) {
  require_same_nonempty(ax.size(), ay.size());
  require_same_nonempty(bx.size(), by.size());
  return dtw_impl(ax.size(), bx.size(), band, [&](std::size_t i, std::size_t j) {
    return std::hypot(ax[i] - bx[j], ay[i] - by[j]);
  });
}

std::vector<double> moving_average(const std::vector<double>& a, std::size_t n) {
  if (n == 0) throw std::logic_error("moving_average: window must be positive");
  // direct per-window sums: no rolling-sum drift, each output depends only on
  // its own window contents
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t lo = i + 1 > n ? i + 1 - n : 0;
    double s = 0.0;
    for (std::size_t j = lo; j <= i; ++j) s += a[j];
    out[i] = s / double(i - lo + 1);
  }
  return out;
}

}  // namespace softfin::metrics
