#pragma once

// synthetic flexible-fin test rig, stepped at 100 hz. a position servo drives
// the fin base with a trapezoidal velocity profile; the fin itself follows
// the base through a first-order lag (compliance), and the fluid pushes back
// normal to the fin surface with a quasi-steady drag term plus an added-mass
// term. measured forces carry gaussian sensor noise. this is the ground-truth
// system: data collection and final controller evaluation run here, never the
// learned surrogate.

#include "softfin/rng.hpp"

namespace softfin {

inline constexpr double kPi = 3.14159265358979323846;

// command bounds are open intervals: the servo target stays strictly inside
// (-pi/2, pi/2) and the commanded speed inside (1, pi) rad/s
inline constexpr double kCmdAngleLo = -kPi / 2.0;
inline constexpr double kCmdAngleHi = kPi / 2.0;
inline constexpr double kCmdOmegaLo = 1.0;
inline constexpr double kCmdOmegaHi = kPi;

struct MotorCommand {
  double angle = 0.0;  // target base angle, rad
  double omega = 1.0;  // cruise speed toward the target, rad/s
};

void validate_command(const MotorCommand& cmd);  // throws outside open bounds

struct PlantParams {
  double dt = 0.01;     // tick period, s (100 hz)
  double a_max = 40.0;  // servo acceleration cap, rad/s^2
  double tau = 0.12;    // fin compliance time constant, s
  double c_n = 0.8;     // quasi-steady normal drag coefficient
  double c_a = 0.05;    // added-mass coefficient
  double sigma = 0.05;  // per-axis force noise std, N
};

struct PlantState {
  double theta_m = 0.0;  // base (motor) angle, rad — the encoder reading
  double omega_m = 0.0;  // base angular rate, rad/s
  double theta_f = 0.0;  // fin angle, rad
  double omega_f = 0.0;  // fin angular rate, rad/s
  double alpha_f = 0.0;  // fin angular acceleration, rad/s^2
};

struct ForceSample {
  double fx = 0.0, fy = 0.0;  // planar force on the fin, N
};

// advance one tick under cmd and return the (noisy) force measurement
ForceSample plant_step(PlantState& s, const MotorCommand& cmd, const PlantParams& p, Rng& rng);

}  // namespace softfin
