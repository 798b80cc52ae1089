#include "softfin/plant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace softfin {

void validate_command(const MotorCommand& cmd) {
  if (!(cmd.angle > kCmdAngleLo && cmd.angle < kCmdAngleHi) ||
      !(cmd.omega > kCmdOmegaLo - 1e-12 && cmd.omega < kCmdOmegaHi)) {
    std::ostringstream os;
    os << "motor command out of bounds: angle=" << cmd.angle << " omega=" << cmd.omega;
    throw std::runtime_error(os.str());
  }
}

ForceSample plant_step(PlantState& s, const MotorCommand& cmd, const PlantParams& p, Rng& rng) {
  // servo: trapezoidal profile. desired speed is the commanded cruise speed
  // capped by the braking parabola sqrt(2*a_max*|err|) so the base can stop
  // at the target without overshoot; actual speed slews at a_max.
  const double err = cmd.angle - s.theta_m;
  const double v_allow = std::sqrt(2.0 * p.a_max * std::abs(err));
  const double v_des = (err >= 0.0 ? 1.0 : -1.0) * std::min(cmd.omega, v_allow);
  const double dv = std::clamp(v_des - s.omega_m, -p.a_max * p.dt, p.a_max * p.dt);
  s.omega_m += dv;
  s.theta_m += s.omega_m * p.dt;

  // fin compliance: first-order lag toward the base angle
  const double theta_f_new = s.theta_f + p.dt * (s.theta_m - s.theta_f) / p.tau;
  const double omega_f_new = (theta_f_new - s.theta_f) / p.dt;
  s.alpha_f = (omega_f_new - s.omega_f) / p.dt;
  s.omega_f = omega_f_new;
  s.theta_f = theta_f_new;

  // fluid load along the fin normal n = (-sin th_f, cos th_f):
  // quasi-steady drag c_n*w|w| plus added-mass reaction c_a*alpha
  const double load = p.c_n * s.omega_f * std::abs(s.omega_f) + p.c_a * s.alpha_f;
  ForceSample f;
  f.fx = -load * (-std::sin(s.theta_f));
  f.fy = -load * std::cos(s.theta_f);
  if (p.sigma > 0.0) {
    f.fx += p.sigma * rng.normal();
    f.fy += p.sigma * rng.normal();
  }
  return f;
}

}  // namespace softfin
