#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mavland/geo.hpp"
#include "mavland/guidance.hpp"

namespace mavland {

struct MavParams {
  double mass{3.4};      // kg
  double kd{0.12};       // N*s^2/m^2, per-axis quadratic drag
  double g{9.81};        // m/s^2
  double tau_att{0.15};  // s, first-order attitude lag
  double tau_vz{0.3};    // s, vertical-velocity tracker lag
  double alt_kp{1.0};    // 1/s, altitude-hold P gain onto vz
};

struct MavTruth {
  Vec3 p = Vec3::Zero();  // NED, m
  Vec3 v = Vec3::Zero();  // NED, m/s
  Vec3 a = Vec3::Zero();  // NED, m/s^2, realized over the last step
  double phi{0.0};
  double theta{0.0};
  double psi{0.0};

  Rotation attitude() const { return rotation_from_euler(phi, theta, psi); }
};

namespace detail {

/// Specific force on the MAV: gravity + body-z thrust + signed quadratic drag.
inline Vec3 mav_accel(const Vec3& v, const Rotation& R_nb, double thrust, const MavParams& p) {
  Vec3 f(0.0, 0.0, p.mass * p.g);
  f += R_nb * Vec3(0.0, 0.0, -thrust);
  for (int i = 0; i < 3; ++i) f[i] -= p.kd * v[i] * std::abs(v[i]);
  return f / p.mass;
}

}  // namespace detail

/**
 * One plant step. The attitude relaxes toward the command with an exact
 * first-order exponential, then translation integrates by RK4 with the new
 * attitude held fixed. AltHold/Velocity vertical modes replace the vertical
 * channel with a closed-form first-order vz tracker; Cut leaves the force
 * model alone (ballistic fall under whatever thrust the command carries).
 */
inline MavTruth mav_step(const MavTruth& s, const GuidanceCommand& cmd, double dt,
                         const MavParams& params) {
  if (!(dt > 0.0 && dt <= 0.02)) throw std::invalid_argument("mav_step: dt outside (0, 0.02]");
  MavTruth out = s;

  const double blend = 1.0 - std::exp(-dt / params.tau_att);
  out.phi += (cmd.phi - s.phi) * blend;
  out.theta += (cmd.theta - s.theta) * blend;
  out.psi = wrap_angle(s.psi + wrap_angle(cmd.psi - s.psi) * blend);

  const Rotation R_nb = out.attitude();
  const auto f = [&](const Vec3& v) { return detail::mav_accel(v, R_nb, cmd.thrust, params); };

  const Vec3 k1v = f(s.v);
  const Vec3 k1p = s.v;
  const Vec3 k2v = f(s.v + 0.5 * dt * k1v);
  const Vec3 k2p = s.v + 0.5 * dt * k1v;
  const Vec3 k3v = f(s.v + 0.5 * dt * k2v);
  const Vec3 k3p = s.v + 0.5 * dt * k2v;
  const Vec3 k4v = f(s.v + dt * k3v);
  const Vec3 k4p = s.v + dt * k3v;
  out.p = s.p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  out.v = s.v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

  if (cmd.vertical.mode != VerticalMode::Cut) {
    double vz_des = 0.0;
    if (cmd.vertical.mode == VerticalMode::AltHold) {
      vz_des = params.alt_kp * (-s.p.z() - cmd.vertical.value);  // above target -> descend
    } else {
      vz_des = cmd.vertical.value;
    }
    const double decay = std::exp(-dt / params.tau_vz);
    out.v.z() = vz_des + (s.v.z() - vz_des) * decay;
    out.p.z() = s.p.z() + vz_des * dt + (s.v.z() - vz_des) * params.tau_vz * (1.0 - decay);
  }

  out.a = (out.v - s.v) / dt;
  return out;
}

struct GvSegment {
  enum class Type { Straight, Arc };
  Type type{Type::Straight};
  double length{0.0};        // m of horizontal path
  double target_speed{0.0};  // m/s at segment exit; linear ramp from entry speed
  double radius{0.0};        // m, Arc only
  int turn{1};               // Arc only: +1 right, -1 left
  double grade{0.0};         // percent rise per horizontal meter; positive climbs
};

struct GvProfile {
  Vec3 start = Vec3::Zero();
  double start_heading{0.0};
  double start_speed{0.0};
  std::vector<GvSegment> segments;
};

struct GvTruth {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
  double heading{0.0};
};

namespace detail {

/// Pose on one segment at path offset s from its entry, entry speed v0.
inline GvTruth segment_pose(const GvSegment& seg, const Vec3& entry_p, double entry_heading,
                            double s, double sdot, double sddot) {
  GvTruth out;
  const double dzds = -seg.grade / 100.0;
  if (seg.type == GvSegment::Type::Straight) {
    const Vec2 fwd(std::cos(entry_heading), std::sin(entry_heading));
    out.heading = entry_heading;
    out.p << entry_p.x() + fwd.x() * s, entry_p.y() + fwd.y() * s, entry_p.z() + dzds * s;
    out.v << fwd.x() * sdot, fwd.y() * sdot, dzds * sdot;
    out.a << fwd.x() * sddot, fwd.y() * sddot, dzds * sddot;
  } else {
    const double sigma = seg.turn >= 0 ? 1.0 : -1.0;
    const double psi = entry_heading + sigma * s / seg.radius;
    const Vec2 fwd(std::cos(psi), std::sin(psi));
    const Vec2 right(-std::sin(psi), std::cos(psi));
    const Vec2 right0(-std::sin(entry_heading), std::cos(entry_heading));
    const Vec2 center(entry_p.x() + sigma * seg.radius * right0.x(),
                      entry_p.y() + sigma * seg.radius * right0.y());
    out.heading = wrap_angle(psi);
    out.p << center.x() - sigma * seg.radius * right.x(),
             center.y() - sigma * seg.radius * right.y(),
             entry_p.z() + dzds * s;
    const double centripetal = sigma * sdot * sdot / seg.radius;
    out.v << fwd.x() * sdot, fwd.y() * sdot, dzds * sdot;
    out.a << fwd.x() * sddot + right.x() * centripetal,
             fwd.y() * sddot + right.y() * centripetal,
             dzds * sddot;
  }
  return out;
}

}  // namespace detail

/**
 * Closed-form pose along the profile. Speed ramps linearly over each segment's
 * length; past the last segment the final geometry extrapolates at constant
 * exit speed. Throws on invalid segments (nonpositive length, unreachable
 * zero-speed ramp, Arc without positive radius).
 */
inline GvTruth gv_state(const GvProfile& profile, double t) {
  if (t < 0.0) throw std::invalid_argument("gv_state: t must be >= 0");
  Vec3 entry_p = profile.start;
  double entry_heading = profile.start_heading;
  double v0 = profile.start_speed;
  double t0 = 0.0;
  for (std::size_t i = 0; i < profile.segments.size(); ++i) {
    const GvSegment& seg = profile.segments[i];
    if (!(seg.length > 0.0)) throw std::invalid_argument("gv_state: segment length must be > 0");
    if (seg.type == GvSegment::Type::Arc && !(seg.radius > 0.0)) {
      throw std::invalid_argument("gv_state: arc radius must be > 0");
    }
    const double v1 = seg.target_speed;
    if (v0 + v1 <= 0.0) throw std::invalid_argument("gv_state: segment never progresses");
    const double duration = 2.0 * seg.length / (v0 + v1);
    const double accel = (v1 - v0) / duration;
    const double dt = t - t0;
    if (dt <= duration) {
      const double s = v0 * dt + 0.5 * accel * dt * dt;
      return detail::segment_pose(seg, entry_p, entry_heading, s, v0 + accel * dt, accel);
    }
    if (i + 1 == profile.segments.size()) {
      // extrapolate the final geometry at the exit speed
      const double s = seg.length + v1 * (dt - duration);
      return detail::segment_pose(seg, entry_p, entry_heading, s, v1, 0.0);
    }
    const GvTruth exit = detail::segment_pose(seg, entry_p, entry_heading, seg.length, v1, 0.0);
    entry_p = exit.p;
    entry_heading = exit.heading;
    v0 = v1;
    t0 += duration;
  }
  // empty profile: parked at the start pose
  GvTruth out;
  out.p = profile.start;
  out.heading = profile.start_heading;
  if (profile.start_speed > 0.0) {
    const Vec2 fwd(std::cos(entry_heading), std::sin(entry_heading));
    out.p.x() += fwd.x() * profile.start_speed * t;
    out.p.y() += fwd.y() * profile.start_speed * t;
    out.v << fwd.x() * profile.start_speed, fwd.y() * profile.start_speed, 0.0;
  }
  return out;
}

struct DragFit {
  double kd{0.0};
  double residual_rms{0.0};
};

/**
 * Least-squares drag coefficient from level-flight terminal speeds:
 * minimizes sum over samples of (m g tan(theta) - kd v^2)^2.
 */
inline DragFit fit_drag_coefficient(const std::vector<std::pair<double, double>>& samples,
                                    double mass, double g) {
  if (samples.size() < 2) throw std::invalid_argument("fit_drag_coefficient: need >= 2 samples");
  double num = 0.0, den = 0.0;
  for (const auto& [theta, vt] : samples) {
    const double v2 = vt * vt;
    num += mass * g * std::tan(theta) * v2;
    den += v2 * v2;
  }
  if (den <= 0.0) throw std::invalid_argument("fit_drag_coefficient: all speeds are zero");
  DragFit fit;
  fit.kd = num / den;
  double ss = 0.0;
  for (const auto& [theta, vt] : samples) {
    const double r = mass * g * std::tan(theta) - fit.kd * vt * vt;
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(samples.size()));
  return fit;
}

}  // namespace mavland
