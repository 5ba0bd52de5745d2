#include "ratepred/channel/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ratepred::channel {

using std::numbers::pi;

MobilityLevel mobility_low() { return {"low", 2.0, pi / 2.0, pi / 10.0, pi / 20.0}; }
MobilityLevel mobility_medium() { return {"medium", 5.0, pi / 3.0, 2.0 * pi / 10.0, 2.0 * pi / 20.0}; }
MobilityLevel mobility_high() { return {"high", 10.0, pi / 6.0, 3.0 * pi / 10.0, 3.0 * pi / 20.0}; }

MobilityLevel mobility_from_name(std::string_view name) {
  if (name == "low") {
    return mobility_low();
  }
  if (name == "medium") {
    return mobility_medium();
  }
  if (name == "high") {
    return mobility_high();
  }
  throw std::invalid_argument("unknown mobility level '" + std::string(name) +
                              "' (expected low, medium or high)");
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * pi);
  if (r <= -pi) {
    r += 2.0 * pi;
  }
  return r;
}

MobilitySample sample_mobility(const MobilityLevel& level, Rng& rng) {
  MobilitySample s{};
  s.acceleration = rng.uniform(-1.0, 1.0);
  s.heading_rate = rng.uniform(-level.heading_rate_bound, level.heading_rate_bound);
  return s;
}

RotationSample sample_rotation(const MobilityLevel& level, Rng& rng) {
  RotationSample s{};
  s.yaw_increment = rng.uniform(-level.yaw_increment_bound, level.yaw_increment_bound);
  s.pitch_increment = rng.uniform(-level.pitch_increment_bound, level.pitch_increment_bound);
  return s;
}

UEState step_mobility(UEState state, const MobilityLevel& level, const MobilitySample& sample) {
  const double accel = std::clamp(sample.acceleration, -1.0, 1.0);
  const double omega = std::clamp(sample.heading_rate, -level.heading_rate_bound, level.heading_rate_bound);
  state.speed = std::clamp(state.speed + accel * kStepSeconds, 0.0, level.v_max);
  state.heading = wrap_angle(state.heading + omega * kStepSeconds);
  const double moved = state.speed * kStepSeconds;
  state.x += moved * std::cos(state.heading);
  state.y += moved * std::sin(state.heading);
  state.distance_since_shadow_update += moved;
  ++state.step;
  return state;
}

UEState step_mobility(const UEState& state, const MobilityLevel& level, Rng& rng) {
  return step_mobility(state, level, sample_mobility(level, rng));
}

UEState step_rotation(UEState state, const MobilityLevel& level, const RotationSample& sample) {
  const double dyaw = std::clamp(sample.yaw_increment, -level.yaw_increment_bound, level.yaw_increment_bound);
  const double dpitch =
      std::clamp(sample.pitch_increment, -level.pitch_increment_bound, level.pitch_increment_bound);
  state.yaw = wrap_angle(state.yaw + dyaw);
  state.pitch = std::clamp(state.pitch + dpitch, -pi / 2.0, pi / 2.0);
  return state;
}

UEState step_rotation(const UEState& state, const MobilityLevel& level, Rng& rng) {
  return step_rotation(state, level, sample_rotation(level, rng));
}

}  // namespace ratepred::channel
