#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mavland/geo.hpp"
#include "mavland/mission.hpp"

namespace mavland {

inline constexpr int kStateDim = 18;

using Vec18 = Eigen::Matrix<double, kStateDim, 1>;
using Mat18 = Eigen::Matrix<double, kStateDim, kStateDim>;

/// State ordering: [p_m, v_m, a_m, p_a, v_a, a_a], each a NED triple.
struct FilterState {
  Vec18 mean = Vec18::Zero();
  Mat18 covariance = Mat18::Zero();
  double timestamp{0.0};

  Vec3 mav_position() const { return mean.segment<3>(0); }
  Vec3 mav_velocity() const { return mean.segment<3>(3); }
  Vec3 mav_acceleration() const { return mean.segment<3>(6); }
  Vec3 pad_position() const { return mean.segment<3>(9); }
  Vec3 pad_velocity() const { return mean.segment<3>(12); }
  Vec3 pad_acceleration() const { return mean.segment<3>(15); }
};

/// Discrete constant-jerk-noise kinematic model shared by both vehicles.
struct ProcessModel {
  Mat18 F = Mat18::Identity();
  Mat18 Q = Mat18::Zero();
  double Ts{0.01};
  double q_wm{4.0};
  double q_wa{2.0};
};

enum class SensorKind {
  InsFull = 0,
  GvGpsWithHeading,
  GvGpsPositionOnly,
  GimbalCamera,
  BottomCamera,
  GvPhoneImu,
};
inline constexpr int kSensorKindCount = 6;

inline const char* to_string(SensorKind k) {
  switch (k) {
    case SensorKind::InsFull:           return "ins";
    case SensorKind::GvGpsWithHeading:  return "gv_gps_heading";
    case SensorKind::GvGpsPositionOnly: return "gv_gps_position";
    case SensorKind::GimbalCamera:      return "gimbal_camera";
    case SensorKind::BottomCamera:      return "bottom_camera";
    case SensorKind::GvPhoneImu:        return "gv_phone_imu";
  }
  return "?";
}

inline bool sensor_kind_from_string(const std::string& s, SensorKind& out) {
  for (int i = 0; i < kSensorKindCount; ++i) {
    const auto k = static_cast<SensorKind>(i);
    if (s == to_string(k)) { out = k; return true; }
  }
  return false;
}

struct Measurement {
  SensorKind kind{SensorKind::InsFull};
  Eigen::VectorXd z;
  Eigen::Matrix<double, Eigen::Dynamic, kStateDim> H;
  Eigen::MatrixXd R;
  double timestamp{0.0};
};

/// 9x9 position/velocity/acceleration transition for one vehicle, well defined for any Ts.
inline Eigen::Matrix<double, 9, 9> transition_block(double Ts) {
  Eigen::Matrix3d a;
  a << 1.0, Ts, Ts * Ts / 2.0,
       0.0, 1.0, Ts,
       0.0, 0.0, 1.0;
  Eigen::Matrix<double, 9, 9> f = Eigen::Matrix<double, 9, 9>::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      f.block<3, 3>(3 * i, 3 * j) = a(i, j) * Eigen::Matrix3d::Identity();
  return f;
}

/// Unit-PSD ZOH process noise for one vehicle (white jerk integrated over Ts).
inline Eigen::Matrix<double, 9, 9> process_noise_block(double Ts) {
  const double t2 = Ts * Ts, t3 = t2 * Ts, t4 = t3 * Ts, t5 = t4 * Ts;
  Eigen::Matrix3d q;
  q << t5 / 20.0, t4 / 8.0, t3 / 6.0,
       t4 / 8.0,  t3 / 3.0, t2 / 2.0,
       t3 / 6.0,  t2 / 2.0, Ts;
  Eigen::Matrix<double, 9, 9> out = Eigen::Matrix<double, 9, 9>::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out.block<3, 3>(3 * i, 3 * j) = q(i, j) * Eigen::Matrix3d::Identity();
  return out;
}

inline ProcessModel make_process_model(double Ts, double q_wm, double q_wa) {
  if (!(Ts > 0.0)) throw std::invalid_argument("make_process_model: Ts must be > 0");
  if (q_wm < 0.0 || q_wa < 0.0) throw std::invalid_argument("make_process_model: PSD must be >= 0");
  ProcessModel m;
  m.Ts = Ts;
  m.q_wm = q_wm;
  m.q_wa = q_wa;
  const auto f9 = transition_block(Ts);
  const auto q9 = process_noise_block(Ts);
  m.F.setZero();
  m.F.block<9, 9>(0, 0) = f9;
  m.F.block<9, 9>(9, 9) = f9;
  m.Q.setZero();
  m.Q.block<9, 9>(0, 0) = q_wm * q9;
  m.Q.block<9, 9>(9, 9) = q_wa * q9;
  return m;
}

inline FilterState predict(const FilterState& s, const ProcessModel& m) {
  FilterState out;
  out.mean = m.F * s.mean;
  out.covariance = m.F * s.covariance * m.F.transpose() + m.Q;
  // the sum must land in a temporary or the in-place transpose read aliases
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.timestamp = s.timestamp + m.Ts;
  return out;
}

/// Joseph-form measurement update; keeps the covariance symmetric PSD.
inline FilterState update(const FilterState& s, const Measurement& z) {
  const auto rows = z.z.size();
  if (z.H.rows() != rows || z.R.rows() != rows || z.R.cols() != rows) {
    throw std::invalid_argument("update: measurement dimension mismatch");
  }
  if (Eigen::LLT<Eigen::MatrixXd>(z.R).info() != Eigen::Success) {
    throw std::invalid_argument("update: R is not positive definite");
  }
  const Eigen::MatrixXd S = z.H * s.covariance * z.H.transpose() + z.R;
  const Eigen::MatrixXd K = S.ldlt().solve(z.H * s.covariance).transpose();
  FilterState out;
  out.mean = s.mean + K * (z.z - z.H * s.mean);
  const Mat18 ikh = Mat18::Identity() - K * z.H;
  out.covariance = ikh * s.covariance * ikh.transpose() + K * z.R * K.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.timestamp = s.timestamp;
  return out;
}

/// Declared INS noise levels; the velocity entry switches with the mission phase.
struct InsNoise {
  double pos_std{0.05};
  double vel_std_approach{0.1};
  double vel_std_landing{10.0};
  double accel_std{0.1};
  bool inflate{true};  // false pins the velocity std at the approach value in every phase
};

inline Measurement ins_measurement(double t, const Vec3& p_m, const Vec3& v_m, const Vec3& a_m,
                                   MissionPhase phase, const InsNoise& noise = {}) {
  Measurement m;
  m.kind = SensorKind::InsFull;
  m.timestamp = t;
  m.z.resize(9);
  m.z << p_m, v_m, a_m;
  m.H.setZero(9, kStateDim);
  m.H.block<9, 9>(0, 0).setIdentity();
  const bool landing = noise.inflate && phase != MissionPhase::Approach;
  const double vel_std = landing ? noise.vel_std_landing : noise.vel_std_approach;
  Eigen::VectorXd diag(9);
  diag << Vec3::Constant(noise.pos_std * noise.pos_std),
          Vec3::Constant(vel_std * vel_std),
          Vec3::Constant(noise.accel_std * noise.accel_std);
  m.R = diag.asDiagonal();
  return m;
}

/// Heading/speed rows are kept only at or above this ground speed.
inline constexpr double kGpsHeadingMinSpeed = 2.5;

/**
 * GV phone GPS already converted to NED. Below the heading-speed threshold the
 * measurement degrades to position-only; R_dev is the device-reported 5x5
 * covariance (position block + velocity block), trimmed to match.
 */
inline Measurement gv_gps_measurement_ned(double t, const Vec3& p_ned, double psi_a, double U_a,
                                          const Eigen::MatrixXd& R_dev) {
  if (R_dev.rows() != 5 || R_dev.cols() != 5) {
    throw std::invalid_argument("gv_gps_measurement: R_dev must be 5x5");
  }
  Measurement m;
  m.timestamp = t;
  if (U_a >= kGpsHeadingMinSpeed) {
    m.kind = SensorKind::GvGpsWithHeading;
    const Vec2 v = heading_speed_to_velocity(psi_a, U_a);
    m.z.resize(5);
    m.z << p_ned, v;
    m.H.setZero(5, kStateDim);
    m.H.block<3, 3>(0, 9).setIdentity();
    m.H.block<2, 2>(3, 12).setIdentity();
    m.R = R_dev;
  } else {
    m.kind = SensorKind::GvGpsPositionOnly;
    m.z = p_ned;
    m.H.setZero(3, kStateDim);
    m.H.block<3, 3>(0, 9).setIdentity();
    m.R = R_dev.topLeftCorner<3, 3>();
  }
  return m;
}

inline Measurement gv_gps_measurement(double t, const GeodeticPoint& p, const GeodeticPoint& origin,
                                      double psi_a, double U_a, const Eigen::MatrixXd& R_dev) {
  return gv_gps_measurement_ned(t, geodetic_to_ned(p, origin), psi_a, U_a, R_dev);
}

/// Relative-position camera rows: z observes p_m - p_a in NED.
inline Measurement relative_camera_measurement(double t, SensorKind kind, const Vec3& p_rel_cam,
                                               const Rotation& R_ned_cam, double declared_std) {
  Measurement m;
  m.kind = kind;
  m.timestamp = t;
  m.z = R_ned_cam * p_rel_cam;
  m.H.setZero(3, kStateDim);
  m.H.block<3, 3>(0, 0).setIdentity();
  m.H.block<3, 3>(0, 9) = -Eigen::Matrix3d::Identity();
  m.R = declared_std * declared_std * Eigen::Matrix3d::Identity();
  return m;
}

inline Measurement gimbal_camera_measurement(double t, const Vec3& p_rel_G, const Rotation& R_NG,
                                             double declared_std = 0.2) {
  return relative_camera_measurement(t, SensorKind::GimbalCamera, p_rel_G, R_NG, declared_std);
}

inline Measurement bottom_camera_measurement(double t, const Vec3& p_rel_C, const Rotation& R_NC,
                                             double declared_std = 0.3) {
  return relative_camera_measurement(t, SensorKind::BottomCamera, p_rel_C, R_NC, declared_std);
}

inline Measurement gv_imu_measurement(double t, const Vec3& a_a, double std_dev = 0.6) {
  Measurement m;
  m.kind = SensorKind::GvPhoneImu;
  m.timestamp = t;
  m.z = a_a;
  m.H.setZero(3, kStateDim);
  m.H.block<3, 3>(0, 15).setIdentity();
  m.R = std_dev * std_dev * Eigen::Matrix3d::Identity();
  return m;
}

/**
 * Owns the filter state plus the book-keeping the pure functions leave out:
 * clocking, lazy initialization, the one-period staleness rule, and per-sensor
 * update counts.
 *
 * Initialization waits for one MAV INS sample and one GV GPS sample; each
 * fills its vehicle's position/velocity rows, accelerations start at zero and
 * the covariance at identity. Until then predict_step only advances the clock.
 */
class Estimator {
 public:
  explicit Estimator(const ProcessModel& model) : model_(model) {}

  bool initialized() const { return initialized_; }
  double time() const { return static_cast<double>(tick_) * model_.Ts; }
  const ProcessModel& model() const { return model_; }
  const FilterState& state() const { return state_; }

  void predict_step() {
    ++tick_;
    if (initialized_) {
      state_ = predict(state_, model_);
      state_.timestamp = time();  // exact tick product, no accumulation drift
    }
  }

  /// Applies (or absorbs, pre-init) one measurement. False = dropped as stale.
  bool feed(const Measurement& m) {
    if (!initialized_) {
      absorb_init(m);
      return true;
    }
    if (m.timestamp < state_.timestamp - model_.Ts - 1e-9) {
      ++dropped_stale_;
      return false;
    }
    state_ = update(state_, m);
    ++update_counts_[static_cast<int>(m.kind)];
    return true;
  }

  long dropped_stale() const { return dropped_stale_; }
  long update_count(SensorKind k) const { return update_counts_[static_cast<int>(k)]; }
  const std::array<long, kSensorKindCount>& update_counts() const { return update_counts_; }

 private:
  void absorb_init(const Measurement& m) {
    switch (m.kind) {
      case SensorKind::InsFull:
        init_mean_.segment<3>(0) = m.z.segment<3>(0);
        init_mean_.segment<3>(3) = m.z.segment<3>(3);
        has_mav_ = true;
        break;
      case SensorKind::GvGpsWithHeading:
        init_mean_.segment<3>(9) = m.z.segment<3>(0);
        init_mean_.segment<2>(12) = m.z.segment<2>(3);
        has_pad_ = true;
        break;
      case SensorKind::GvGpsPositionOnly:
        init_mean_.segment<3>(9) = m.z.segment<3>(0);
        has_pad_ = true;
        break;
      default:
        break;  // cameras and the phone IMU cannot anchor absolute position
    }
    if (has_mav_ && has_pad_) {
      initialized_ = true;
      state_.mean = init_mean_;
      state_.covariance = Mat18::Identity();
      state_.timestamp = time();
    }
  }

  ProcessModel model_;
  FilterState state_;
  Vec18 init_mean_ = Vec18::Zero();
  std::int64_t tick_{0};
  bool initialized_{false};
  bool has_mav_{false};
  bool has_pad_{false};
  long dropped_stale_{0};
  std::array<long, kSensorKindCount> update_counts_{};
};

/// Delivery comparison slack shared by the live loop and offline replay.
inline constexpr double kTimeEps = 1e-9;

/**
 * Re-runs estimation over a recorded measurement stream (delivery order,
 * timestamps already latency-shifted). per_tick(k, estimator) fires once per
 * prediction tick after the tick's deliveries, k = 0..ticks.
 */
template <class PerTick>
Estimator replay_measurements(const ProcessModel& model, const std::vector<Measurement>& stream,
                              std::int64_t ticks, PerTick&& per_tick) {
  Estimator est(model);
  std::size_t next = 0;
  for (std::int64_t k = 0; k <= ticks; ++k) {
    if (k > 0) est.predict_step();
    const double t = static_cast<double>(k) * model.Ts;
    while (next < stream.size() && stream[next].timestamp <= t + kTimeEps) {
      est.feed(stream[next]);
      ++next;
    }
    per_tick(k, est);
  }
  return est;
}

}  // namespace mavland
