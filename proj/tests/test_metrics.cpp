#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "softfin/metrics.hpp"

using namespace softfin;
using namespace softfin::metrics;
using testutil::check_close;

namespace {

// exhaustive oracle: enumerate every monotone warping path and minimize
// (cost, length) lexicographically — the dp must match exactly
struct OraclePath {
  double cost = std::numeric_limits<double>::infinity();
  std::size_t len = 0;
};

template <typename Dist>
void oracle_walk(std::size_t i, std::size_t j, std::size_t n, std::size_t m, double cost,
                 std::size_t len, Dist d, OraclePath& best) {
  cost += d(i, j);
  ++len;
  if (i == n - 1 && j == m - 1) {
    if (cost < best.cost || (cost == best.cost && len < best.len)) best = OraclePath{cost, len};
    return;
  }
  if (i + 1 < n) oracle_walk(i + 1, j, n, m, cost, len, d, best);
  if (j + 1 < m) oracle_walk(i, j + 1, n, m, cost, len, d, best);
  if (i + 1 < n && j + 1 < m) oracle_walk(i + 1, j + 1, n, m, cost, len, d, best);
}

}  // namespace

TEST_CASE("rmse and mae closed forms") {
  std::vector<double> a{1.0, 2.0, 3.0, 4.0}, b{1.0, 2.5, 2.0, 4.0};
  check_close(rmse(a, b), std::sqrt((0.25 + 1.0) / 4.0), 1e-15);
  check_close(mae(a, b), (0.5 + 1.0) / 4.0, 1e-15);
  CHECK(rmse(a, a) == 0.0);
  CHECK(mae(a, a) == 0.0);
  CHECK_THROWS_AS(rmse(a, std::vector<double>{1.0}), std::logic_error);
  CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), std::logic_error);
}

TEST_CASE("2-channel rmse/mae score per-sample euclidean error") {
  std::vector<double> ax{0.0, 3.0}, ay{0.0, 4.0}, bx{0.0, 0.0}, by{0.0, 0.0};
  check_close(mae2(ax, ay, bx, by), (0.0 + 5.0) / 2.0, 1e-15);
  check_close(rmse2(ax, ay, bx, by), std::sqrt(25.0 / 2.0), 1e-15);
  // collapsing one channel reduces to the 1-channel metric
  std::vector<double> z(ax.size(), 0.0);
  check_close(rmse2(ax, z, bx, z), rmse(ax, bx), 1e-15);
}

TEST_CASE("dtw matches the exhaustive path oracle exactly") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.uniform_below(5), m = 2 + rng.uniform_below(5);
    std::vector<double> a = testutil::rand_vec(rng, n, -2.0, 2.0);
    std::vector<double> b = testutil::rand_vec(rng, m, -2.0, 2.0);
    auto d = [&](std::size_t i, std::size_t j) { return std::abs(a[i] - b[j]); };
    OraclePath best;
    oracle_walk(0, 0, n, m, 0.0, 0, d, best);
    const auto got = dtw(a, b);
    CHECK(got.cost == best.cost);  // identical accumulation order -> exact
    CHECK(got.path_len == best.len);
    CHECK(got.normalized == best.cost / double(best.len));
  }
}

TEST_CASE("dtw2 matches the exhaustive oracle on planar series") {
  Rng rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.uniform_below(4), m = 2 + rng.uniform_below(4);
    auto ax = testutil::rand_vec(rng, n), ay = testutil::rand_vec(rng, n);
    auto bx = testutil::rand_vec(rng, m), by = testutil::rand_vec(rng, m);
    auto d = [&](std::size_t i, std::size_t j) {
      return std::hypot(ax[i] - bx[j], ay[i] - by[j]);
    };
    OraclePath best;
    oracle_walk(0, 0, n, m, 0.0, 0, d, best);
    const auto got = dtw2(ax, ay, bx, by);
    CHECK(got.cost == best.cost);
    CHECK(got.path_len == best.len);
  }
}

TEST_CASE("dtw identities and known values") {
  std::vector<double> a{0.0, 1.0, 2.0, 3.0};
  const auto self = dtw(a, a);
  CHECK(self.cost == 0.0);
  CHECK(self.path_len == a.size());
  CHECK(self.normalized == 0.0);

  // constant shift of a constant series: every cell costs the shift
  std::vector<double> c(6, 1.0), cs(6, 1.5);
  const auto sh = dtw(c, cs);
  CHECK(sh.path_len == 6);  // lexicographic tie-break picks the diagonal
  check_close(sh.cost, 6 * 0.5, 1e-15);

  // symmetry
  std::vector<double> b{2.0, 0.5, 1.0};
  const auto ab = dtw(a, b), ba = dtw(b, a);
  CHECK(ab.cost == ba.cost);
  CHECK(ab.path_len == ba.path_len);

  // time-warped copies align almost for free
  std::vector<double> slow{0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0};
  CHECK(dtw(a, slow).cost == 0.0);
}

TEST_CASE("sakoe-chiba band: wide bands reproduce the unconstrained optimum") {
  Rng rng(19);
  auto a = testutil::rand_vec(rng, 40), b = testutil::rand_vec(rng, 37);
  const auto free_dp = dtw(a, b);
  const auto wide = dtw(a, b, 100);
  CHECK(free_dp.cost == wide.cost);
  CHECK(free_dp.path_len == wide.path_len);
  // a narrow band is still feasible (auto-widened to the length gap) and
  // can only do worse or equal
  const auto narrow = dtw(a, b, 1);
  CHECK(narrow.cost >= free_dp.cost);
}

TEST_CASE("moving average: brute-force oracle with partial prefix") {
  Rng rng(20);
  auto a = testutil::rand_vec(rng, 300, -3.0, 3.0);
  for (std::size_t w : {std::size_t(1), std::size_t(7), std::size_t(200), std::size_t(500)}) {
    const auto got = moving_average(a, w);
    REQUIRE(got.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t lo = i + 1 > w ? i + 1 - w : 0;
      double s = 0.0;
      for (std::size_t j = lo; j <= i; ++j) s += a[j];
      check_close(got[i], s / double(i - lo + 1), 1e-12);
    }
  }
  // window 1 is the identity; constants are invariant
  const auto id = moving_average(a, 1);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(id[i] == a[i]);
  std::vector<double> c(50, 2.5);
  for (double v : moving_average(c, 200)) check_close(v, 2.5, 1e-15);
  CHECK_THROWS_AS(moving_average(a, 0), std::logic_error);
}
