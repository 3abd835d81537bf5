#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace mavland {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// 3x3 direction cosine matrix, columns = child-frame axes expressed in the parent frame.
using Rotation = Eigen::Matrix3d;

/// Spherical-Earth radius used by the flat-Earth conversion, meters.
inline constexpr double kEarthRadius = 6378137.0;

/// Geodetic position; angles in radians, altitude in meters above the reference.
struct GeodeticPoint {
  double latitude{0.0};
  double longitude{0.0};
  double altitude{0.0};
};

inline bool finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

inline bool finite(const GeodeticPoint& p) {
  return std::isfinite(p.latitude) && std::isfinite(p.longitude) && std::isfinite(p.altitude);
}

/**
 * Flat-Earth geodetic -> local NED offset from `origin`, meters.
 *
 *   x = (la - la0) R_E
 *   y = (lo - lo0) cos(la) R_E      (instantaneous latitude)
 *   z = al0 - al                    (down positive)
 *
 * Valid for offsets small against the Earth radius (~10 km).
 */
inline Vec3 geodetic_to_ned(const GeodeticPoint& p, const GeodeticPoint& origin) {
  if (!finite(p) || !finite(origin)) {
    throw std::invalid_argument("geodetic_to_ned: non-finite input");
  }
  return {(p.latitude - origin.latitude) * kEarthRadius,
          (p.longitude - origin.longitude) * std::cos(p.latitude) * kEarthRadius,
          origin.altitude - p.altitude};
}

/// Exact inverse of geodetic_to_ned (latitude recovered first, then used for the y scale).
inline GeodeticPoint ned_to_geodetic(const Vec3& ned, const GeodeticPoint& origin) {
  if (!finite(ned) || !finite(origin)) {
    throw std::invalid_argument("ned_to_geodetic: non-finite input");
  }
  GeodeticPoint p;
  p.latitude = origin.latitude + ned.x() / kEarthRadius;
  p.longitude = origin.longitude + ned.y() / (std::cos(p.latitude) * kEarthRadius);
  p.altitude = origin.altitude - ned.z();
  return p;
}

/// Planar NED velocity from GPS course/speed: (U cos psi, U sin psi).
inline Vec2 heading_speed_to_velocity(double psi, double speed) {
  return {speed * std::cos(psi), speed * std::sin(psi)};
}

/**
 * Body-to-NED rotation for ZYX Euler angles (yaw psi, then pitch theta, then roll phi).
 *
 *       | ct cp   sf st cp - cf sp   cf st cp + sf sp |
 * R  =  | ct sp   sf st sp + cf cp   cf st sp - sf cp |
 *       |  -st         sf ct               cf ct      |
 */
inline Rotation rotation_from_euler(double phi, double theta, double psi) {
  const double cf = std::cos(phi), sf = std::sin(phi);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(psi), sp = std::sin(psi);
  Rotation r;
  r << ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp,
       ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp,
       -st,     sf * ct,                cf * ct;
  return r;
}

/// Yaw-only rotation about NED z (down).
inline Rotation rotation_about_down(double psi) {
  return rotation_from_euler(0.0, 0.0, psi);
}

/// Orthonormality + right-handedness check used by the Rotation invariant tests.
inline bool is_rotation(const Rotation& r, double tol = 1e-12) {
  return (r.transpose() * r - Rotation::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

/// Fixed mount of the bottom camera: body frame rotated +90 deg about body z.
inline Rotation body_to_bottom_camera() {
  return rotation_about_down(M_PI / 2.0);
}

/**
 * Gimbal camera frame from pan/tilt, NED parent. The gimbal is inertially
 * stabilized, so the angles are defined directly in NED: pan rotates the
 * boresight about down, tilt elevates it (tilt = -pi/2 looks straight down).
 * Camera axes: z = boresight, x = horizontal right of boresight, y = z cross x.
 */
inline Rotation gimbal_rotation(double pan, double tilt) {
  const double cp = std::cos(pan), sp = std::sin(pan);
  const double ct = std::cos(tilt), st = std::sin(tilt);
  const Vec3 boresight(ct * cp, ct * sp, -st);
  const Vec3 right(-sp, cp, 0.0);
  const Vec3 down_image = boresight.cross(right);
  Rotation r;
  r.col(0) = right;
  r.col(1) = down_image;
  r.col(2) = boresight;
  return r;
}

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace mavland
