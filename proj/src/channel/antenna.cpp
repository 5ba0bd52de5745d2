#include "ratepred/channel/antenna.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ratepred::channel {

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

std::string_view to_string(PatternKind kind) { return kind == PatternKind::Dipole ? "dipole" : "patch"; }

PatternKind pattern_from_name(std::string_view name) {
  if (name == "dipole") {
    return PatternKind::Dipole;
  }
  if (name == "patch") {
    return PatternKind::Patch;
  }
  throw std::invalid_argument("unknown antenna pattern '" + std::string(name) + "'");
}

AntennaModel default_patch(int rx_id, Vec3 boresight) {
  return AntennaModel{rx_id, PatternKind::Patch, boresight, 6.0, 2.0, -20.0};
}

AntennaModel default_dipole(int rx_id, Vec3 axis) {
  return AntennaModel{rx_id, PatternKind::Dipole, axis, 1.76, 1.0, -20.0};
}

double antenna_gain(const AntennaModel& model, const Vec3& direction) {
  if (std::abs(norm(direction) - 1.0) > 1e-9) {
    throw std::invalid_argument("antenna_gain: arrival direction must be a unit vector");
  }
  const double c = std::clamp(dot(model.boresight, direction) / norm(model.boresight), -1.0, 1.0);
  const double floor_lin = std::pow(10.0, model.floor_db / 10.0);
  if (model.kind == PatternKind::Dipole) {
    const double sin2 = std::max(0.0, 1.0 - c * c);
    return model.peak_gain_dbi + 10.0 * std::log10(std::max(sin2, floor_lin));
  }
  constexpr double kTiny = 1e-12;
  const double g = model.peak_gain_dbi + 10.0 * model.pattern_exponent * std::log10(std::max(c, 0.0) + kTiny);
  return std::clamp(g, model.peak_gain_dbi + model.floor_db, model.peak_gain_dbi);
}

Vec3 to_body_frame(const Vec3& world, double yaw, double pitch) {
  const double cy = std::cos(yaw);
  const double sy = std::sin(yaw);
  const double x1 = cy * world.x + sy * world.y;
  const double y1 = -sy * world.x + cy * world.y;
  const double z1 = world.z;
  const double cp = std::cos(pitch);
  const double sp = std::sin(pitch);
  return Vec3{cp * x1 - sp * z1, y1, sp * x1 + cp * z1};
}

}  // namespace ratepred::channel
