#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mavland/filter.hpp"
#include "mavland/geo.hpp"
#include "mavland/guidance.hpp"
#include "mavland/rng.hpp"
#include "mavland/vehicles.hpp"

namespace mavland {

struct CameraModel {
  double max_range{5.0};
  double min_range{0.0};
  double fov{60.0 * M_PI / 180.0};  // full cone angle about the boresight
  double tag_side{0.0};             // m; 0 disables the subtended-angle gate
  double min_subtend{0.0};          // rad the tag side must subtend
};

inline CameraModel default_gimbal_camera() { return CameraModel{}; }

inline CameraModel default_bottom_camera() {
  CameraModel m;
  m.max_range = 8.0;
  m.min_range = 0.1;
  m.fov = 176.0 * M_PI / 180.0;
  m.tag_side = 0.30;
  m.min_subtend = 1.5 * M_PI / 180.0;
  return m;
}

struct SensorTiming {
  double rate{1.0};     // Hz
  double latency{0.0};  // s between physical sampling and availability
  double dropout{0.0};  // per-sample loss probability
};

/// Forces one sensor silent over [t_begin, t_end); for regression scenarios.
struct OutageWindow {
  SensorKind kind{SensorKind::GimbalCamera};
  double t_begin{0.0};
  double t_end{0.0};
};

struct SensorsConfig {
  SensorTiming ins{100.0, 0.0, 0.0};
  SensorTiming phone_gps{1.0, 0.3, 0.0};
  SensorTiming phone_imu{25.0, 0.1, 0.0};
  SensorTiming gimbal_camera{30.0, 0.033, 0.0};
  SensorTiming bottom_camera{20.0, 0.033, 0.0};

  // true corruption scales (declared filter R values live in FilterConfig)
  double ins_pos_std{0.05};
  double ins_vel_std{0.1};
  double ins_accel_std{0.1};
  double gps_horiz_std{1.5};
  double gps_vert_std{3.0};
  double gps_speed_std{0.3};
  double gps_heading_std{5.0 * M_PI / 180.0};
  double imu_accel_std{0.6};
  double gimbal_true_std{0.02};
  double bottom_true_std{0.03};
  double gimbal_declared_std{0.2};
  double bottom_declared_std{0.3};

  CameraModel gimbal_model = default_gimbal_camera();
  CameraModel bottom_model = default_bottom_camera();

  // optical-flow corruption while hovering over the moving pad
  double over_pad_beta{0.8};
  double over_pad_radius{1.5};  // m horizontal
  double over_pad_height{4.0};  // m above the pad plane

  std::vector<OutageWindow> outages;
};

/**
 * MAV INS sample. Position/velocity/acceleration plus Gaussian noise; when
 * over_pad the reported velocity is pulled toward the pad-relative velocity by
 * beta (the downward optical-flow camera locking onto the moving pad). The
 * declared R never reflects that fault, only the phase-based inflation.
 */
inline Measurement sample_ins(double stamp, const MavTruth& mav, const Vec3& gv_vel, bool over_pad,
                              MissionPhase phase, const SensorsConfig& cfg, const InsNoise& declared,
                              RandomStream& rng) {
  Vec3 v = mav.v;
  if (over_pad) v -= cfg.over_pad_beta * gv_vel;
  Vec3 p_n, v_n, a_n;
  for (int i = 0; i < 3; ++i) p_n[i] = rng.gaussian(mav.p[i], cfg.ins_pos_std);
  for (int i = 0; i < 3; ++i) v_n[i] = rng.gaussian(v[i], cfg.ins_vel_std);
  for (int i = 0; i < 3; ++i) a_n[i] = rng.gaussian(mav.a[i], cfg.ins_accel_std);
  return ins_measurement(stamp, p_n, v_n, a_n, phase, declared);
}

/// Device-reported 5x5 GPS covariance: position diag + velocity block pushed
/// through the (U, psi) -> (vx, vy) Jacobian at the measured values.
inline Eigen::MatrixXd gps_device_covariance(double U, double psi, const SensorsConfig& cfg) {
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(5, 5);
  R(0, 0) = cfg.gps_horiz_std * cfg.gps_horiz_std;
  R(1, 1) = R(0, 0);
  R(2, 2) = cfg.gps_vert_std * cfg.gps_vert_std;
  Eigen::Matrix2d J;
  J << std::cos(psi), -U * std::sin(psi),
       std::sin(psi),  U * std::cos(psi);
  Eigen::Matrix2d S = Eigen::Vector2d(cfg.gps_speed_std * cfg.gps_speed_std,
                                      cfg.gps_heading_std * cfg.gps_heading_std).asDiagonal();
  R.block<2, 2>(3, 3) = J * S * J.transpose();
  return R;
}

/**
 * One emitted measurement plus the context a replay needs to rebuild its H and
 * R exactly: aux1 is the phase index for INS rows and the measured ground
 * speed for GPS fixes; aux2 is the measured course for GPS fixes.
 */
struct SensorRecord {
  Measurement m;
  double aux1{0.0};
  double aux2{0.0};
};

/**
 * GV phone GPS sample: geodetic fix with position noise plus course/speed with
 * their own noise. Heading gating happens in the measurement builder, so a
 * slow GV comes back as position-only.
 */
inline SensorRecord sample_phone_gps(double stamp, const GvTruth& gv, const GeodeticPoint& origin,
                                     const SensorsConfig& cfg, RandomStream& rng) {
  Vec3 p;
  p.x() = rng.gaussian(gv.p.x(), cfg.gps_horiz_std);
  p.y() = rng.gaussian(gv.p.y(), cfg.gps_horiz_std);
  p.z() = rng.gaussian(gv.p.z(), cfg.gps_vert_std);
  const double U_true = std::hypot(gv.v.x(), gv.v.y());
  const double psi_true = std::atan2(gv.v.y(), gv.v.x());
  const double U = std::max(0.0, rng.gaussian(U_true, cfg.gps_speed_std));
  const double psi = wrap_angle(rng.gaussian(psi_true, cfg.gps_heading_std));
  const GeodeticPoint fix = ned_to_geodetic(p, origin);
  SensorRecord rec;
  rec.m = gv_gps_measurement(stamp, fix, origin, psi, U, gps_device_covariance(U, psi, cfg));
  rec.aux1 = U;
  rec.aux2 = psi;
  return rec;
}

inline Measurement sample_phone_imu(double stamp, const GvTruth& gv, const SensorsConfig& cfg,
                                    RandomStream& rng) {
  Vec3 a;
  for (int i = 0; i < 3; ++i) a[i] = rng.gaussian(gv.a[i], cfg.imu_accel_std);
  return gv_imu_measurement(stamp, a, cfg.imu_accel_std);
}

namespace detail {

inline bool camera_sees(const Vec3& boresight, const Vec3& los_to_tag, const CameraModel& model) {
  const double range = los_to_tag.norm();
  if (range < model.min_range || range > model.max_range || range < 1e-9) return false;
  const double cos_off = boresight.dot(los_to_tag) / range;
  if (cos_off < std::cos(model.fov / 2.0)) return false;
  if (model.tag_side > 0.0) {
    const double subtend = 2.0 * std::atan(model.tag_side / (2.0 * range));
    if (subtend < model.min_subtend) return false;
  }
  return true;
}

inline Measurement camera_measurement(double stamp, SensorKind kind, const Vec3& p_m,
                                      const Vec3& p_a, const Rotation& R_nc, double true_std,
                                      double declared_std, RandomStream& rng) {
  Vec3 p_rel = R_nc.transpose() * (p_m - p_a);
  for (int i = 0; i < 3; ++i) p_rel[i] = rng.gaussian(p_rel[i], true_std);
  return relative_camera_measurement(stamp, kind, p_rel, R_nc, declared_std);
}

}  // namespace detail

/// Gimbaled camera detection: the tag must sit inside the FOV cone around the
/// current boresight and within range. Noise is drawn in the camera frame.
inline std::optional<Measurement> sample_gimbal_camera(double stamp, const MavTruth& mav,
                                                       const GvTruth& gv, const GimbalAngles& angles,
                                                       const SensorsConfig& cfg, RandomStream& rng) {
  const Rotation R_ng = gimbal_rotation(angles.pan, angles.tilt);
  if (!detail::camera_sees(R_ng.col(2), gv.p - mav.p, cfg.gimbal_model)) return std::nullopt;
  return detail::camera_measurement(stamp, SensorKind::GimbalCamera, mav.p, gv.p, R_ng,
                                    cfg.gimbal_true_std, cfg.gimbal_declared_std, rng);
}

/// Fixed wide-angle camera looking along body-down; detection additionally
/// needs the tag to subtend a resolvable angle.
inline std::optional<Measurement> sample_bottom_camera(double stamp, const MavTruth& mav,
                                                       const GvTruth& gv, const SensorsConfig& cfg,
                                                       RandomStream& rng) {
  const Rotation R_nb = mav.attitude();
  if (!detail::camera_sees(R_nb.col(2), gv.p - mav.p, cfg.bottom_model)) return std::nullopt;
  const Rotation R_nc = R_nb * body_to_bottom_camera();
  return detail::camera_measurement(stamp, SensorKind::BottomCamera, mav.p, gv.p, R_nc,
                                    cfg.bottom_true_std, cfg.bottom_declared_std, rng);
}

/**
 * Drives every sensor at its own rate against the 100 Hz tick grid. A sensor
 * due between ticks fires at the first tick at or after its nominal time,
 * samples that tick's truth, and is stamped nominal_time + latency; delivery
 * happens at the first tick at or after the stamp. Each sensor draws from its
 * own substream so reconfiguring one never perturbs another.
 */
class SensorRig {
 public:
  SensorRig(const SensorsConfig& cfg, const InsNoise& declared, const GeodeticPoint& origin,
            std::uint64_t seed)
      : cfg_(cfg), declared_(declared), origin_(origin),
        rng_ins_(seed, 1), rng_gps_(seed, 2), rng_imu_(seed, 3),
        rng_gimbal_(seed, 4), rng_bottom_(seed, 5) {}

  /// Samples all sensors due at tick time t; call exactly once per tick.
  void poll(double t, const MavTruth& mav, const GvTruth& gv, const GimbalAngles& gimbal,
            MissionPhase phase) {
    const Vec3 rel = mav.p - gv.p;
    const bool over_pad = std::hypot(rel.x(), rel.y()) <= cfg_.over_pad_radius &&
                          (gv.p.z() - mav.p.z()) <= cfg_.over_pad_height;

    if (due(t, cfg_.ins.rate, k_ins_)) {
      const double stamp = nominal(k_ins_, cfg_.ins.rate) + cfg_.ins.latency;
      ++k_ins_;
      if (up(SensorKind::InsFull, t, cfg_.ins, rng_ins_)) {
        SensorRecord rec;
        rec.m = sample_ins(stamp, mav, gv.v, over_pad, phase, cfg_, declared_, rng_ins_);
        rec.aux1 = static_cast<double>(static_cast<int>(phase));
        pending_.push_back(std::move(rec));
      }
    }
    if (due(t, cfg_.phone_gps.rate, k_gps_)) {
      const double stamp = nominal(k_gps_, cfg_.phone_gps.rate) + cfg_.phone_gps.latency;
      ++k_gps_;
      if (up(SensorKind::GvGpsWithHeading, t, cfg_.phone_gps, rng_gps_)) {
        pending_.push_back(sample_phone_gps(stamp, gv, origin_, cfg_, rng_gps_));
      }
    }
    if (due(t, cfg_.phone_imu.rate, k_imu_)) {
      const double stamp = nominal(k_imu_, cfg_.phone_imu.rate) + cfg_.phone_imu.latency;
      ++k_imu_;
      if (up(SensorKind::GvPhoneImu, t, cfg_.phone_imu, rng_imu_)) {
        pending_.push_back({sample_phone_imu(stamp, gv, cfg_, rng_imu_), 0.0, 0.0});
      }
    }
    if (due(t, cfg_.gimbal_camera.rate, k_gimbal_)) {
      const double stamp = nominal(k_gimbal_, cfg_.gimbal_camera.rate) + cfg_.gimbal_camera.latency;
      ++k_gimbal_;
      std::optional<Measurement> m;
      if (up(SensorKind::GimbalCamera, t, cfg_.gimbal_camera, rng_gimbal_)) {
        m = sample_gimbal_camera(stamp, mav, gv, gimbal, cfg_, rng_gimbal_);
      }
      note_detection(SensorKind::GimbalCamera, t, m.has_value(), gimbal_detected_);
      if (m) pending_.push_back({std::move(*m), 0.0, 0.0});
    }
    if (due(t, cfg_.bottom_camera.rate, k_bottom_)) {
      const double stamp = nominal(k_bottom_, cfg_.bottom_camera.rate) + cfg_.bottom_camera.latency;
      ++k_bottom_;
      std::optional<Measurement> m;
      if (up(SensorKind::BottomCamera, t, cfg_.bottom_camera, rng_bottom_)) {
        m = sample_bottom_camera(stamp, mav, gv, cfg_, rng_bottom_);
      }
      note_detection(SensorKind::BottomCamera, t, m.has_value(), bottom_detected_);
      if (m) pending_.push_back({std::move(*m), 0.0, 0.0});
    }
  }

  /// Pops, in emission order, all pending measurements whose stamp has passed.
  std::vector<SensorRecord> collect_due(double t) {
    std::vector<SensorRecord> out;
    std::size_t keep = 0;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      if (pending_[i].m.timestamp <= t + kTimeEps) {
        out.push_back(std::move(pending_[i]));
      } else {
        pending_[keep++] = std::move(pending_[i]);
      }
    }
    pending_.resize(keep);
    return out;
  }

  /// Camera detection gain/loss events since the last call, as (t, text).
  std::vector<std::pair<double, std::string>> drain_events() {
    return std::exchange(events_, {});
  }

 private:
  static double nominal(long k, double rate) { return static_cast<double>(k) / rate; }

  static bool due(double t, double rate, long k) {
    return t + kTimeEps >= nominal(k, rate);
  }

  /// Applies outage windows and the dropout draw; true = the sensor reports.
  bool up(SensorKind kind, double t, const SensorTiming& timing, RandomStream& rng) {
    for (const auto& w : cfg_.outages) {
      if (w.kind == kind && t >= w.t_begin && t < w.t_end) return false;
    }
    if (timing.dropout > 0.0 && rng.bernoulli(timing.dropout)) return false;
    return true;
  }

  void note_detection(SensorKind kind, double t, bool detected, bool& previous) {
    if (detected != previous) {
      events_.emplace_back(t, std::string(to_string(kind)) +
                                  (detected ? " acquired" : " lost"));
      previous = detected;
    }
  }

  SensorsConfig cfg_;
  InsNoise declared_;
  GeodeticPoint origin_;
  RandomStream rng_ins_, rng_gps_, rng_imu_, rng_gimbal_, rng_bottom_;
  long k_ins_{0}, k_gps_{0}, k_imu_{0}, k_gimbal_{0}, k_bottom_{0};
  bool gimbal_detected_{false};
  bool bottom_detected_{false};
  std::vector<SensorRecord> pending_;
  std::vector<std::pair<double, std::string>> events_;
};

}  // namespace mavland
