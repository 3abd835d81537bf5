#pragma once

#include <algorithm>
#include <cmath>

#include "mavland/filter.hpp"
#include "mavland/geo.hpp"
#include "mavland/mission.hpp"

namespace mavland {

/// LOS range below which PN geometry is degenerate and the lateral law yields zero.
inline constexpr double kPnEpsilon = 0.1;

struct GuidanceGains {
  double lambda{3.0};      // PN navigation constant
  double Kp_par{0.3};      // closing-velocity PD, position gain
  double Kd_par{0.8};      // closing-velocity PD, rate gain
  double Kp{2.0};          // landing PID
  double Ki{0.3};
  double Kd{1.5};
  double switch_in{6.0};   // m, Approach -> Landing
  double switch_out{7.0};  // m, Landing -> Approach (hysteresis)
  double descend_vz{0.75}; // m/s downward, relative to the pad
  double disarm_height{0.2};
  double attitude_limit{30.0 * M_PI / 180.0};
  double integral_clamp{2.0};  // m*s, per axis
  double stab_pos{0.3};        // m, horizontal error for "stabilized over the pad"
  double stab_vel{0.5};        // m/s, horizontal relative speed for the same
  double stab_hold{0.5};       // s the stabilized condition must persist
  bool project_closing{false}; // project the PD term onto the LOS direction
};

enum class VerticalMode { AltHold, Velocity, Cut };

struct VerticalCommand {
  VerticalMode mode{VerticalMode::AltHold};
  double value{0.0};  // AltHold: target altitude (m up); Velocity: vz (m/s, NED down positive)
};

struct GuidanceCommand {
  double theta{0.0};
  double phi{0.0};
  double psi{0.0};
  double thrust{0.0};  // N
  VerticalCommand vertical;
  MissionPhase phase{MissionPhase::Approach};
};

struct PnResult {
  Vec3 a_perp = Vec3::Zero();
  bool degenerate{false};
};

/**
 * Proportional navigation normal to the LOS. u = p_a - p_m, udot = v_a - v_m
 * (both from the filter estimate):
 *
 *   Omega = (u x udot) / (u . u)
 *   a_perp = -lambda |udot| (u/|u|) x Omega
 */
inline PnResult pn_acceleration(const Vec3& u, const Vec3& udot, double lambda) {
  PnResult r;
  const double range = u.norm();
  if (range <= kPnEpsilon) {
    r.degenerate = true;
    return r;
  }
  const Vec3 omega = u.cross(udot) / u.squaredNorm();
  r.a_perp = -lambda * udot.norm() * (u / range).cross(omega);
  return r;
}

/// PD acceleration along the closing geometry: Kp_par u + Kd_par udot.
inline Vec3 closing_acceleration(const Vec3& u, const Vec3& udot, double Kp_par, double Kd_par) {
  return Kp_par * u + Kd_par * udot;
}

/**
 * Full approach-phase lateral command: PN + closing PD with the z component
 * discarded (vertical control is a separate channel). Degenerate geometry
 * drops the PN part only.
 */
inline PnResult approach_acceleration(const Vec3& u, const Vec3& udot, const GuidanceGains& g) {
  PnResult r = pn_acceleration(u, udot, g.lambda);
  Vec3 par = closing_acceleration(u, udot, g.Kp_par, g.Kd_par);
  if (g.project_closing) {
    const double range = u.norm();
    if (range > kPnEpsilon) {
      const Vec3 dir = u / range;
      par = par.dot(dir) * dir;
    }
  }
  r.a_perp += par;
  r.a_perp.z() = 0.0;
  return r;
}

struct AttitudeCommand {
  double theta{0.0};
  double phi{0.0};
  double thrust{0.0};
};

/**
 * Inverts the level-flight force balance for pitch/roll/thrust at zero yaw:
 *
 *   theta = -atan((m ax + kd vx|vx|) / (m g))
 *   phi   =  atan(cos(theta) (m ay + kd vy|vy|) / (m g))
 *   T     =  m g / (cos(phi) cos(theta))
 *
 * Angles saturate at +-limit; thrust uses the saturated angles. Inputs must
 * already be expressed in the zero-yaw controller frame.
 */
inline AttitudeCommand accel_to_attitude(const Vec3& a_cmd_xy, const Vec3& v_m, double m, double kd,
                                         double g, double limit = 30.0 * M_PI / 180.0) {
  const double mg = m * g;
  const double fx = m * a_cmd_xy.x() + kd * v_m.x() * std::abs(v_m.x());
  const double fy = m * a_cmd_xy.y() + kd * v_m.y() * std::abs(v_m.y());
  AttitudeCommand c;
  c.theta = std::clamp(-std::atan(fx / mg), -limit, limit);
  c.phi = std::clamp(std::atan(std::cos(c.theta) * fy / mg), -limit, limit);
  c.thrust = mg / (std::cos(c.phi) * std::cos(c.theta));
  return c;
}

struct PidResult {
  Vec3 accel = Vec3::Zero();
  Vec3 integral = Vec3::Zero();
};

/**
 * Landing-phase PID on the relative position. The integral advances by u*dt
 * with a per-axis anti-windup clamp before it is used, so a constant u held
 * for 1 s contributes exactly Ki*u.
 */
inline PidResult pid_acceleration(const Vec3& u, const Vec3& udot, const Vec3& integral,
                                  const GuidanceGains& g, double dt) {
  PidResult r;
  r.integral = integral + u * dt;
  for (int i = 0; i < 3; ++i) {
    r.integral[i] = std::clamp(r.integral[i], -g.integral_clamp, g.integral_clamp);
  }
  r.accel = g.Kp * u + g.Ki * r.integral + g.Kd * udot;
  return r;
}

/**
 * Phase switching. Approach and Landing exchange through the [switch_in,
 * switch_out] hysteresis band; Descent starts once stabilized over the pad;
 * Disarmed fires at disarm_height and is terminal.
 */
inline MissionPhase select_phase(MissionPhase current, double horizontal_distance, bool stabilized,
                                 double height_above_pad, const GuidanceGains& g) {
  switch (current) {
    case MissionPhase::Approach:
      return horizontal_distance < g.switch_in ? MissionPhase::Landing : MissionPhase::Approach;
    case MissionPhase::Landing:
      if (horizontal_distance > g.switch_out) return MissionPhase::Approach;
      return stabilized ? MissionPhase::Descent : MissionPhase::Landing;
    case MissionPhase::Descent:
      return height_above_pad <= g.disarm_height ? MissionPhase::Disarmed : MissionPhase::Descent;
    case MissionPhase::Disarmed:
      return MissionPhase::Disarmed;
  }
  return current;
}

/// Tracks how long the stabilized-over-pad condition has held continuously.
class StabilizationMonitor {
 public:
  bool step(const Vec3& u, const Vec3& udot, const GuidanceGains& g, double dt) {
    const bool inside = std::hypot(u.x(), u.y()) < g.stab_pos &&
                        std::hypot(udot.x(), udot.y()) < g.stab_vel;
    held_ = inside ? held_ + dt : 0.0;
    return held_ >= g.stab_hold - 1e-9;
  }
  void reset() { held_ = 0.0; }

 private:
  double held_{0.0};
};

/**
 * Vertical channel by phase: constant-altitude hold through Approach/Landing,
 * constant descent rate relative to the pad's estimated vertical motion in
 * Descent, thrust cut at Disarmed.
 */
inline VerticalCommand vertical_command(MissionPhase phase, const FilterState& est,
                                        double cruise_altitude, double descend_vz) {
  switch (phase) {
    case MissionPhase::Approach:
    case MissionPhase::Landing:
      return {VerticalMode::AltHold, cruise_altitude};
    case MissionPhase::Descent:
      return {VerticalMode::Velocity, est.pad_velocity().z() + descend_vz};
    case MissionPhase::Disarmed:
      return {VerticalMode::Cut, 0.0};
  }
  return {VerticalMode::Cut, 0.0};
}

/// Yaw setpoint: follow the estimated GV course when it is moving, otherwise
/// face the pad while far from it, otherwise hold.
inline double yaw_command(const FilterState& est, double previous) {
  const Vec3 v_a = est.pad_velocity();
  if (std::hypot(v_a.x(), v_a.y()) > 1.0) return std::atan2(v_a.y(), v_a.x());
  const Vec3 u = est.pad_position() - est.mav_position();
  if (std::hypot(u.x(), u.y()) > 2.0) return std::atan2(u.y(), u.x());
  return previous;
}

struct GimbalAngles {
  double pan{0.0};
  double tilt{0.0};
};

/**
 * Slews the gimbal toward the estimated LOS (los_est = p_a - p_m) at no more
 * than rate_limit per axis. Degenerate LOS holds the current angles.
 */
inline GimbalAngles point_gimbal(const GimbalAngles& current, const Vec3& los_est, double dt,
                                 double rate_limit) {
  if (los_est.norm() <= kPnEpsilon) return current;
  const double pan_des = std::atan2(los_est.y(), los_est.x());
  const double tilt_des = -std::asin(std::clamp(los_est.z() / los_est.norm(), -1.0, 1.0));
  const double step = rate_limit * dt;
  GimbalAngles out;
  out.pan = current.pan + std::clamp(wrap_angle(pan_des - current.pan), -step, step);
  out.pan = wrap_angle(out.pan);
  out.tilt = current.tilt + std::clamp(tilt_des - current.tilt, -step, step);
  return out;
}

}  // namespace mavland
