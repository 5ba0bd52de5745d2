#pragma once

#include <string>
#include <string_view>

#include "ratepred/rng.hpp"

namespace ratepred::channel {

inline constexpr double kStepSeconds = 0.05;

/// Pedestrian and handset-rotation bounds. All bounds are symmetric: a value
/// b means uniform sampling in [-b, b].
struct MobilityLevel {
  std::string name;
  double v_max = 0.0;                  // m/s
  double heading_rate_bound = 0.0;     // rad/s
  double yaw_increment_bound = 0.0;    // rad per step
  double pitch_increment_bound = 0.0;  // rad per step
};

MobilityLevel mobility_low();
MobilityLevel mobility_medium();
MobilityLevel mobility_high();
/// "low" | "medium" | "high"; throws std::invalid_argument otherwise.
MobilityLevel mobility_from_name(std::string_view name);

struct UEState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, (-pi, pi]
  double speed = 0.0;    // m/s
  double yaw = 0.0;      // rad, (-pi, pi]
  double pitch = 0.0;    // rad, [-pi/2, pi/2]
  long step = 0;
  double distance_since_shadow_update = 0.0;  // m
};

/// Wraps to (-pi, pi].
double wrap_angle(double a);

struct MobilitySample {
  double acceleration;  // m/s^2
  double heading_rate;  // rad/s
};

struct RotationSample {
  double yaw_increment;
  double pitch_increment;
};

/// Draws acceleration in [-1, 1] m/s^2 and a heading rate within the level bound.
MobilitySample sample_mobility(const MobilityLevel& level, Rng& rng);
RotationSample sample_rotation(const MobilityLevel& level, Rng& rng);

/// Advances speed, heading and position by one 50 ms step. Samples are
/// clamped to the level's bounds.
UEState step_mobility(UEState state, const MobilityLevel& level, const MobilitySample& sample);
UEState step_mobility(const UEState& state, const MobilityLevel& level, Rng& rng);

UEState step_rotation(UEState state, const MobilityLevel& level, const RotationSample& sample);
UEState step_rotation(const UEState& state, const MobilityLevel& level, Rng& rng);

}  // namespace ratepred::channel
