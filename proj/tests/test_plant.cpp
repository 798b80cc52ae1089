#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "softfin/plant.hpp"

using namespace softfin;
using testutil::check_close;

TEST_CASE("rest state under a zero command produces zero force without noise") {
  PlantParams p;
  p.sigma = 0.0;
  PlantState s;
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto f = plant_step(s, MotorCommand{0.0, 1.0}, p, rng);
    CHECK(f.fx == 0.0);
    CHECK(f.fy == 0.0);
  }
  CHECK(s.theta_m == 0.0);
  CHECK(s.theta_f == 0.0);
}

TEST_CASE("steady rotation: drag magnitude c_n*w^2 directed against the fin normal") {
  PlantParams p;
  p.sigma = 0.0;
  PlantState s;
  s.theta_m = -1.5;
  s.theta_f = -1.5;
  Rng rng(2);
  const MotorCommand cmd{1.5, 2.0};
  ForceSample f{};
  for (int t = 0; t < 100; ++t) f = plant_step(s, cmd, p, rng);  // 1.0 s, still cruising

  check_close(s.omega_m, 2.0, 1e-9);
  check_close(s.omega_f, 2.0, 1e-2);
  const double load = p.c_n * 2.0 * 2.0;
  check_close(f.fx, load * std::sin(s.theta_f), 1e-2);
  check_close(f.fy, -load * std::cos(s.theta_f), 1e-2);
  const double mag = std::hypot(f.fx, f.fy);
  check_close(mag, load, 1e-2);
}

TEST_CASE("servo reaches the target without overshoot and respects its limits") {
  PlantParams p;
  p.sigma = 0.0;
  for (double target : {0.9, -1.2, 0.3}) {
    for (double w : {1.0, 2.0, 3.0}) {
      PlantState s;
      Rng rng(3);
      const MotorCommand cmd{target, w};
      double peak = 0.0, max_dv = 0.0, max_w = 0.0, prev_w = 0.0;
      for (int t = 0; t < 400; ++t) {
        plant_step(s, cmd, p, rng);
        peak = std::max(peak, (target >= 0.0 ? s.theta_m : -s.theta_m));
        max_dv = std::max(max_dv, std::abs(s.omega_m - prev_w));
        max_w = std::max(max_w, std::abs(s.omega_m));
        prev_w = s.omega_m;
      }
      CHECK(std::abs(s.theta_m - target) < 0.01);
      // discrete slew can carry one tick (~omega*dt) past the target before braking
      CHECK(peak <= std::abs(target) + 0.02);
      CHECK(max_dv <= p.a_max * p.dt + 1e-12);                // acceleration cap
      CHECK(max_w <= w + 1e-9);                               // cruise speed cap
    }
  }
}

TEST_CASE("fin follows the base through an exact first-order lag") {
  PlantParams p;
  p.sigma = 0.0;
  PlantState s;
  s.theta_m = 0.5;  // base parked at the target: theta_m stays frozen
  Rng rng(4);
  const MotorCommand cmd{0.5, 1.0};
  double prev_err = s.theta_m - s.theta_f;
  for (int t = 0; t < 140; ++t) {  // stop before cancellation noise dominates the ratio
    plant_step(s, cmd, p, rng);
    const double err = s.theta_m - s.theta_f;
    check_close(err / prev_err, 1.0 - p.dt / p.tau, 1e-9);
    prev_err = err;
  }
  CHECK(std::abs(s.theta_f - 0.5) < 1e-4);
}

TEST_CASE("mirrored command scripts mirror the force: fx even, fy odd") {
  PlantParams p;
  p.sigma = 0.0;
  PlantState sa, sb;
  Rng ra(5), rb(5), script(6);
  for (int seg = 0; seg < 12; ++seg) {
    const double ang = script.uniform(-1.4, 1.4);
    const double w = script.uniform(1.0, 3.0);
    for (int t = 0; t < 40; ++t) {
      const auto fa = plant_step(sa, MotorCommand{ang, w}, p, ra);
      const auto fb = plant_step(sb, MotorCommand{-ang, w}, p, rb);
      check_close(fb.fx, fa.fx, 1e-12, 1e-14);
      check_close(fb.fy, -fa.fy, 1e-12, 1e-14);
    }
  }
}

TEST_CASE("sensor noise has the configured scale and is seed-reproducible") {
  PlantParams p;  // sigma = 0.05
  const int n = 20000;
  std::vector<double> fx1(n), fx2(n);
  double s2 = 0.0;
  {
    PlantState s;
    Rng rng(7);
    for (int t = 0; t < n; ++t) {
      const auto f = plant_step(s, MotorCommand{0.0, 1.0}, p, rng);
      fx1[t] = f.fx;
      s2 += f.fx * f.fx + f.fy * f.fy;
    }
  }
  const double std_est = std::sqrt(s2 / (2.0 * n));
  check_close(std_est, p.sigma, 0.03);

  {
    PlantState s;
    Rng rng(7);
    for (int t = 0; t < n; ++t) fx2[t] = plant_step(s, MotorCommand{0.0, 1.0}, p, rng).fx;
  }
  for (int t = 0; t < n; ++t) CHECK(fx1[t] == fx2[t]);

  PlantState s;
  Rng other(8);
  bool any_diff = false;
  for (int t = 0; t < 100; ++t)
    any_diff |= plant_step(s, MotorCommand{0.0, 1.0}, p, other).fx != fx1[t];
  CHECK(any_diff);
}

TEST_CASE("command validation enforces the open actuation bounds") {
  CHECK_NOTHROW(validate_command(MotorCommand{0.0, 1.0}));  // neutral pad action
  CHECK_NOTHROW(validate_command(MotorCommand{1.5, 3.0}));
  CHECK_THROWS_AS(validate_command(MotorCommand{kPi / 2.0, 2.0}), std::runtime_error);
  CHECK_THROWS_AS(validate_command(MotorCommand{-kPi / 2.0, 2.0}), std::runtime_error);
  CHECK_THROWS_AS(validate_command(MotorCommand{0.0, 0.5}), std::runtime_error);
  CHECK_THROWS_AS(validate_command(MotorCommand{0.0, kPi}), std::runtime_error);
}

TEST_CASE("added-mass term reacts to angular acceleration at motion onset") {
  PlantParams p;
  p.sigma = 0.0;
  p.c_n = 0.0;  // isolate the added-mass contribution
  PlantState s;
  Rng rng(9);
  const auto f = plant_step(s, MotorCommand{1.0, 3.0}, p, rng);
  // one tick from rest: alpha_f = omega_f/dt with omega_f = dtheta_f/dt
  CHECK(std::abs(s.alpha_f) > 1.0);
  check_close(f.fy, -p.c_a * s.alpha_f * std::cos(s.theta_f), 1e-12);
}
