#pragma once

#include <string_view>

namespace ratepred::channel {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double norm(const Vec3& v);
double dot(const Vec3& a, const Vec3& b);

enum class PatternKind { Dipole, Patch };

std::string_view to_string(PatternKind kind);
PatternKind pattern_from_name(std::string_view name);

/// Receive antenna in the handset body frame. For a dipole `boresight` is the
/// element axis.
struct AntennaModel {
  int rx_id = 1;
  PatternKind kind = PatternKind::Patch;
  Vec3 boresight{1.0, 0.0, 0.0};
  double peak_gain_dbi = 6.0;
  double pattern_exponent = 2.0;
  /// Lowest gain relative to peak (dB, <= 0). For patches this stands in for
  /// hand/body shadowing behind the element.
  double floor_db = -20.0;
};

AntennaModel default_patch(int rx_id, Vec3 boresight);
AntennaModel default_dipole(int rx_id, Vec3 axis);

/// Gain in dBi toward a unit arrival direction given in the body frame.
/// Result lies in [peak + floor_db, peak]. Throws on a non-unit direction.
double antenna_gain(const AntennaModel& model, const Vec3& direction);

/// Rotates a world-frame vector into the body frame of a handset with the
/// given yaw (about z) and pitch (about the yawed y axis).
Vec3 to_body_frame(const Vec3& world, double yaw, double pitch);

}  // namespace ratepred::channel
