#pragma once

// shared test utilities: tolerance checks, random fills, lane iteration.

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "softfin/kernels.hpp"
#include "softfin/rng.hpp"
#include "softfin/tensor.hpp"

namespace testutil {

inline bool close(double a, double b, double rtol, double atol) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

inline void check_close(double a, double b, double rtol, double atol = 0.0) {
  CHECK_MESSAGE(close(a, b, rtol, atol), "a=", a, " b=", b, " diff=", std::abs(a - b));
}

inline void check_all_close(const double* a, const double* b, std::size_t n, double rtol,
                            double atol = 0.0) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!close(a[i], b[i], rtol, atol)) {
      CHECK_MESSAGE(false, "i=", i, " a=", a[i], " b=", b[i], " diff=", std::abs(a[i] - b[i]));
      return;
    }
  }
  CHECK(true);
}

inline std::vector<double> rand_vec(softfin::Rng& rng, std::size_t n, double lo = -1.0,
                                    double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline void fill_rand(softfin::Tensor& t, softfin::Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
}

// run fn under every available kernel lane, restoring the original afterwards
inline void for_each_backend(const std::function<void()>& fn) {
  using softfin::kern::Backend;
  const Backend saved = softfin::kern::backend();
  fn();  // current lane first
  const Backend other =
      saved == Backend::scalar ? Backend::avx2 : Backend::scalar;
  if (other == Backend::scalar || softfin::kern::avx2_supported()) {
    softfin::kern::set_backend(other);
    fn();
  }
  softfin::kern::set_backend(saved);
}

}  // namespace testutil
