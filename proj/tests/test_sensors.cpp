#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "mavland/sensors.hpp"

namespace {

using mavland::GeodeticPoint;
using mavland::GimbalAngles;
using mavland::GvTruth;
using mavland::MavTruth;
using mavland::Measurement;
using mavland::MissionPhase;
using mavland::SensorKind;
using mavland::SensorRecord;
using mavland::SensorsConfig;
using mavland::Vec3;

constexpr double kDeg = M_PI / 180.0;

SensorsConfig noiseless() {
  SensorsConfig cfg;
  cfg.ins_pos_std = 0.0;
  cfg.ins_vel_std = 0.0;
  cfg.ins_accel_std = 0.0;
  cfg.gps_horiz_std = 0.0;
  cfg.gps_vert_std = 0.0;
  cfg.gps_speed_std = 0.0;
  cfg.gps_heading_std = 0.0;
  cfg.imu_accel_std = 0.0;
  cfg.gimbal_true_std = 0.0;
  cfg.bottom_true_std = 0.0;
  return cfg;
}

const GeodeticPoint kOrigin{45.0 * kDeg, 7.0 * kDeg, 100.0};

TEST(InsSample, NoiselessReportsTruth) {
  const SensorsConfig cfg = noiseless();
  mavland::RandomStream rng(1, 1);
  MavTruth mav;
  mav.p = Vec3(1.0, -2.0, -10.0);
  mav.v = Vec3(14.0, 0.5, -0.1);
  mav.a = Vec3(0.2, 0.0, 0.05);
  const Measurement m = mavland::sample_ins(0.5, mav, Vec3::Zero(), false,
                                            MissionPhase::Approach, cfg, {}, rng);
  EXPECT_LT((m.z.segment<3>(0) - mav.p).norm(), 1e-300);
  EXPECT_LT((m.z.segment<3>(3) - mav.v).norm(), 1e-300);
  EXPECT_LT((m.z.segment<3>(6) - mav.a).norm(), 1e-300);
  EXPECT_DOUBLE_EQ(m.timestamp, 0.5);
}

TEST(InsSample, OverPadPullsReportedVelocityTowardPad) {
  SensorsConfig cfg = noiseless();
  cfg.over_pad_beta = 1.0;
  mavland::RandomStream rng(1, 1);
  MavTruth mav;
  mav.v = Vec3(10.0, 0.0, 0.0);
  const Vec3 gv_vel(10.0, 0.0, 0.0);
  const Measurement m = mavland::sample_ins(0.0, mav, gv_vel, true,
                                            MissionPhase::Landing, cfg, {}, rng);
  EXPECT_LT(m.z.segment<3>(3).norm(), 1e-300);  // beta 1: flow locks onto the pad

  // declared covariance never reflects the fault, only the phase inflation
  EXPECT_DOUBLE_EQ(m.R(3, 3), 100.0);
  mavland::RandomStream rng2(1, 1);
  const Measurement clean = mavland::sample_ins(0.0, mav, gv_vel, false,
                                                MissionPhase::Landing, cfg, {}, rng2);
  EXPECT_DOUBLE_EQ(clean.R(3, 3), m.R(3, 3));
  EXPECT_LT((clean.z.segment<3>(3) - mav.v).norm(), 1e-300);

  cfg.over_pad_beta = 0.8;
  mavland::RandomStream rng3(1, 1);
  const Measurement partial = mavland::sample_ins(0.0, mav, gv_vel, true,
                                                  MissionPhase::Landing, cfg, {}, rng3);
  EXPECT_NEAR(partial.z[3], 10.0 - 0.8 * 10.0, 1e-12);
}

TEST(GpsSample, NoiselessRoundTripsThroughGeodetic) {
  const SensorsConfig cfg = noiseless();
  mavland::RandomStream rng(2, 2);
  GvTruth gv;
  gv.p = Vec3(100.0, -50.0, -2.0);
  gv.v = Vec3(14.0, 0.0, 0.0);
  const SensorRecord rec = mavland::sample_phone_gps(1.3, gv, kOrigin, cfg, rng);
  EXPECT_EQ(rec.m.kind, SensorKind::GvGpsWithHeading);
  EXPECT_LT((rec.m.z.segment<3>(0) - gv.p).norm(), 1e-8);  // geodetic round trip
  EXPECT_NEAR(rec.m.z[3], 14.0, 1e-9);
  EXPECT_NEAR(rec.m.z[4], 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(rec.aux1, 14.0);
  EXPECT_DOUBLE_EQ(rec.aux2, 0.0);
}

TEST(GpsSample, SlowVehicleDegradesToPositionOnly) {
  const SensorsConfig cfg = noiseless();
  mavland::RandomStream rng(2, 2);
  GvTruth gv;
  gv.p = Vec3(5.0, 5.0, 0.0);
  gv.v = Vec3(1.0, 0.0, 0.0);  // below the 2.5 m/s heading threshold
  const SensorRecord rec = mavland::sample_phone_gps(0.0, gv, kOrigin, cfg, rng);
  EXPECT_EQ(rec.m.kind, SensorKind::GvGpsPositionOnly);
  EXPECT_EQ(rec.m.z.size(), 3);
}

TEST(GpsDeviceCovariance, VelocityBlockFollowsCourseJacobian) {
  SensorsConfig cfg;
  const double su2 = cfg.gps_speed_std * cfg.gps_speed_std;
  const double sp2 = cfg.gps_heading_std * cfg.gps_heading_std;
  const double U = 10.0;

  const Eigen::MatrixXd north = mavland::gps_device_covariance(U, 0.0, cfg);
  EXPECT_NEAR(north(3, 3), su2, 1e-15);            // along-track from speed noise
  EXPECT_NEAR(north(4, 4), U * U * sp2, 1e-12);    // cross-track from heading noise
  EXPECT_NEAR(north(3, 4), 0.0, 1e-15);

  const Eigen::MatrixXd east = mavland::gps_device_covariance(U, M_PI / 2.0, cfg);
  EXPECT_NEAR(east(3, 3), U * U * sp2, 1e-12);
  EXPECT_NEAR(east(4, 4), su2, 1e-12);

  EXPECT_DOUBLE_EQ(north(0, 0), cfg.gps_horiz_std * cfg.gps_horiz_std);
  EXPECT_DOUBLE_EQ(north(2, 2), cfg.gps_vert_std * cfg.gps_vert_std);
}

TEST(ImuSample, NoiselessReportsPadAcceleration) {
  const SensorsConfig cfg = noiseless();
  mavland::RandomStream rng(3, 3);
  GvTruth gv;
  gv.a = Vec3(1.4, 0.0, -0.03);
  const Measurement m = mavland::sample_phone_imu(0.7, gv, cfg, rng);
  EXPECT_LT((Vec3(m.z) - gv.a).norm(), 1e-300);
}

TEST(GimbalCamera, NoiselessMeasuresRelativePosition) {
  const SensorsConfig cfg = noiseless();
  mavland::RandomStream rng(4, 4);
  MavTruth mav;
  mav.p = Vec3(0.0, 0.0, -4.0);
  GvTruth gv;
  gv.p = Vec3(1.0, 0.0, 0.0);
  const GimbalAngles pointed{0.0, -std::atan2(4.0, 1.0)};  // boresight on the pad
  const auto m = mavland::sample_gimbal_camera(0.0, mav, gv, pointed, cfg, rng);
  ASSERT_TRUE(m.has_value());
  EXPECT_LT((Vec3(m->z) - (mav.p - gv.p)).norm(), 1e-12);
}

TEST(GimbalCamera, RangeAndFovGatesBlockDetection) {
  const SensorsConfig cfg = noiseless();  // gimbal: 5 m max range, 60 deg cone
  mavland::RandomStream rng(4, 4);
  MavTruth mav;
  GvTruth gv;

  mav.p = Vec3(0.0, 0.0, -6.0);  // 6 m above: outside range
  gv.p = Vec3::Zero();
  GimbalAngles down{0.0, -M_PI / 2.0};
  EXPECT_FALSE(mavland::sample_gimbal_camera(0.0, mav, gv, down, cfg, rng).has_value());

  mav.p = Vec3(0.0, 0.0, -4.0);  // in range, boresight down
  EXPECT_TRUE(mavland::sample_gimbal_camera(0.0, mav, gv, down, cfg, rng).has_value());

  // 40 deg off a 60 deg full cone: outside; 25 deg off: inside
  gv.p = Vec3(4.0 * std::tan(40.0 * kDeg), 0.0, 0.0);
  EXPECT_FALSE(mavland::sample_gimbal_camera(0.0, mav, gv, down, cfg, rng).has_value());
  gv.p = Vec3(4.0 * std::tan(25.0 * kDeg), 0.0, 0.0);
  EXPECT_TRUE(mavland::sample_gimbal_camera(0.0, mav, gv, down, cfg, rng).has_value());
}

TEST(BottomCamera, GatesAndMeasuresThroughBodyMount) {
  const SensorsConfig cfg = noiseless();  // bottom: 8 m range, 0.1 m min, subtend gate
  mavland::RandomStream rng(5, 5);
  MavTruth mav;
  GvTruth gv;

  mav.p = Vec3(0.0, 0.0, -12.0);  // beyond max range
  EXPECT_FALSE(mavland::sample_bottom_camera(0.0, mav, gv, cfg, rng).has_value());

  mav.p = Vec3(0.0, 0.0, -2.0);
  gv.p = Vec3(0.25, 0.3, 0.0);  // small lateral offsets stay inside the wide cone
  const auto m = mavland::sample_bottom_camera(0.0, mav, gv, cfg, rng);
  ASSERT_TRUE(m.has_value());
  EXPECT_LT((Vec3(m->z) - (mav.p - gv.p)).norm(), 1e-12);

  mav.p = Vec3(0.0, 0.0, -0.05);  // closer than min range
  gv.p = Vec3::Zero();
  EXPECT_FALSE(mavland::sample_bottom_camera(0.0, mav, gv, cfg, rng).has_value());
}

TEST(BottomCamera, SubtendGateNeedsResolvableTag) {
  SensorsConfig cfg = noiseless();
  cfg.bottom_model.max_range = 50.0;  // leave only the subtend gate binding
  mavland::RandomStream rng(5, 5);
  MavTruth mav;
  GvTruth gv;
  // 0.30 m tag subtends 1.5 deg at about 11.5 m
  mav.p = Vec3(0.0, 0.0, -20.0);
  EXPECT_FALSE(mavland::sample_bottom_camera(0.0, mav, gv, cfg, rng).has_value());
  mav.p = Vec3(0.0, 0.0, -10.0);
  EXPECT_TRUE(mavland::sample_bottom_camera(0.0, mav, gv, cfg, rng).has_value());
}

TEST(Cameras, TranslationInvariant) {
  const SensorsConfig cfg = noiseless();
  MavTruth mav;
  mav.p = Vec3(0.0, 0.0, -3.0);
  GvTruth gv;
  gv.p = Vec3(1.0, 0.5, 0.0);
  const Vec3 shift(250.0, -80.0, -1.0);

  mavland::RandomStream ra(6, 6), rb(6, 6);
  const auto a = mavland::sample_bottom_camera(0.0, mav, gv, cfg, ra);
  MavTruth mav2 = mav;
  GvTruth gv2 = gv;
  mav2.p += shift;
  gv2.p += shift;
  const auto b = mavland::sample_bottom_camera(0.0, mav2, gv2, cfg, rb);
  ASSERT_TRUE(a.has_value());
  ASSERT_TRUE(b.has_value());
  EXPECT_LT((a->z - b->z).cwiseAbs().maxCoeff(), 1e-10);
}

std::vector<SensorRecord> run_rig(const SensorsConfig& cfg, double duration, std::uint64_t seed,
                                  const MavTruth& mav, const GvTruth& gv) {
  mavland::SensorRig rig(cfg, {}, kOrigin, seed);
  std::vector<SensorRecord> all;
  const int ticks = static_cast<int>(std::llround(duration / 0.01));
  for (int k = 0; k <= ticks; ++k) {
    const double t = k * 0.01;
    rig.poll(t, mav, gv, GimbalAngles{0.0, -M_PI / 2.0}, MissionPhase::Approach);
    for (auto& rec : rig.collect_due(t)) all.push_back(std::move(rec));
  }
  return all;
}

TEST(SensorRig, StampsAreNominalTimePlusLatency) {
  SensorsConfig cfg = noiseless();
  MavTruth mav;
  mav.p = Vec3(0.0, 0.0, -3.0);
  GvTruth gv;
  gv.v = Vec3(14.0, 0.0, 0.0);

  const auto all = run_rig(cfg, 1.0, 9, mav, gv);
  std::map<SensorKind, std::vector<double>> stamps;
  for (const auto& rec : all) stamps[rec.m.kind].push_back(rec.m.timestamp);

  ASSERT_GE(stamps[SensorKind::InsFull].size(), 100u);
  for (std::size_t k = 0; k < stamps[SensorKind::InsFull].size(); ++k) {
    EXPECT_DOUBLE_EQ(stamps[SensorKind::InsFull][k], static_cast<double>(k) / 100.0);
  }
  // 30 Hz gimbal with 33 ms latency: stamp = k/30 + 0.033 exactly
  const auto& gim = stamps[SensorKind::GimbalCamera];
  ASSERT_GE(gim.size(), 20u);
  for (std::size_t k = 0; k < gim.size(); ++k) {
    EXPECT_DOUBLE_EQ(gim[k], static_cast<double>(k) / 30.0 + 0.033);
  }
  const auto& gps = stamps[SensorKind::GvGpsWithHeading];
  ASSERT_EQ(gps.size(), 1u);  // k=0 fix lands at 0.3; the k=1 fix is still pending
  EXPECT_DOUBLE_EQ(gps[0], 0.3);
}

TEST(SensorRig, DeliveryNeverPrecedesStamp) {
  SensorsConfig cfg;  // default noise
  MavTruth mav;
  mav.p = Vec3(0.0, 0.0, -3.0);
  GvTruth gv;
  mavland::SensorRig rig(cfg, {}, kOrigin, 10);
  for (int k = 0; k <= 200; ++k) {
    const double t = k * 0.01;
    rig.poll(t, mav, gv, GimbalAngles{0.0, -M_PI / 2.0}, MissionPhase::Approach);
    for (const auto& rec : rig.collect_due(t)) {
      EXPECT_LE(rec.m.timestamp, t + 1e-9);
      EXPECT_GT(rec.m.timestamp, t - 0.01 - 1e-9);  // would have been collected earlier
    }
  }
}

TEST(SensorRig, DropoutOneSilencesSensor) {
  SensorsConfig cfg = noiseless();
  cfg.ins.dropout = 1.0;
  MavTruth mav;
  GvTruth gv;
  const auto all = run_rig(cfg, 0.5, 11, mav, gv);
  for (const auto& rec : all) EXPECT_NE(rec.m.kind, SensorKind::InsFull);
}

TEST(SensorRig, FractionalDropoutLosesSomeSamples) {
  SensorsConfig cfg = noiseless();
  cfg.ins.dropout = 0.5;
  MavTruth mav;
  GvTruth gv;
  const auto all = run_rig(cfg, 2.0, 12, mav, gv);
  int ins = 0;
  for (const auto& rec : all) ins += rec.m.kind == SensorKind::InsFull;
  EXPECT_GT(ins, 50);   // roughly half of 201
  EXPECT_LT(ins, 150);
}

TEST(SensorRig, OutageWindowIsHalfOpen) {
  SensorsConfig cfg = noiseless();
  cfg.outages.push_back({SensorKind::InsFull, 0.2, 0.4});
  MavTruth mav;
  GvTruth gv;
  const auto all = run_rig(cfg, 1.0, 13, mav, gv);
  std::vector<double> ins;
  for (const auto& rec : all) {
    if (rec.m.kind == SensorKind::InsFull) ins.push_back(rec.m.timestamp);
  }
  for (const double t : ins) {
    EXPECT_TRUE(t < 0.2 - 1e-12 || t > 0.4 - 1e-12) << "stamp " << t;
  }
  // the 0.4 s sample itself reports again
  EXPECT_NE(std::find_if(ins.begin(), ins.end(),
                         [](double t) { return std::abs(t - 0.4) < 1e-12; }),
            ins.end());
}

TEST(SensorRig, SameSeedReproducesStreamExactly) {
  SensorsConfig cfg;  // full default noise
  MavTruth mav;
  mav.p = Vec3(-5.0, 0.0, -6.0);
  mav.v = Vec3(3.0, 0.0, 0.0);
  GvTruth gv;
  gv.v = Vec3(14.0, 0.0, 0.0);
  const auto a = run_rig(cfg, 1.5, 77, mav, gv);
  const auto b = run_rig(cfg, 1.5, 77, mav, gv);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].m.kind, b[i].m.kind);
    EXPECT_EQ(a[i].m.timestamp, b[i].m.timestamp);
    EXPECT_EQ((a[i].m.z - b[i].m.z).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(a[i].aux1, b[i].aux1);
    EXPECT_EQ(a[i].aux2, b[i].aux2);
  }
  const auto c = run_rig(cfg, 1.5, 78, mav, gv);
  bool identical = a.size() == c.size();
  if (identical) {
    for (std::size_t i = 0; i < a.size() && identical; ++i) {
      identical = (a[i].m.z - c[i].m.z).cwiseAbs().maxCoeff() == 0.0;
    }
  }
  EXPECT_FALSE(identical);  // a different seed perturbs the draws
}

TEST(SensorRig, SubstreamsAreIndependentAcrossSensors) {
  SensorsConfig cfg;  // full default noise
  MavTruth mav;
  mav.p = Vec3(-5.0, 0.0, -6.0);
  GvTruth gv;
  gv.v = Vec3(14.0, 0.0, 0.0);

  SensorsConfig gagged = cfg;
  gagged.outages.push_back({SensorKind::GimbalCamera, 0.0, 1e9});
  gagged.outages.push_back({SensorKind::BottomCamera, 0.0, 1e9});

  const auto a = run_rig(cfg, 1.0, 55, mav, gv);
  const auto b = run_rig(gagged, 1.0, 55, mav, gv);

  std::vector<const SensorRecord*> ins_a, ins_b;
  for (const auto& rec : a) {
    if (rec.m.kind == SensorKind::InsFull) ins_a.push_back(&rec);
  }
  for (const auto& rec : b) {
    if (rec.m.kind == SensorKind::InsFull) ins_b.push_back(&rec);
  }
  ASSERT_EQ(ins_a.size(), ins_b.size());
  for (std::size_t i = 0; i < ins_a.size(); ++i) {
    EXPECT_EQ((ins_a[i]->m.z - ins_b[i]->m.z).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SensorRig, EmitsAcquisitionEvent) {
  SensorsConfig cfg = noiseless();
  MavTruth mav;
  mav.p = Vec3(0.0, 0.0, -3.0);
  GvTruth inside;

  mavland::SensorRig rig(cfg, {}, kOrigin, 14);
  std::vector<std::string> events;
  for (int k = 0; k <= 100; ++k) {
    const double t = k * 0.01;
    rig.poll(t, mav, inside, GimbalAngles{0.0, -M_PI / 2.0}, MissionPhase::Approach);
    rig.collect_due(t);
  }
  for (auto& ev : rig.drain_events()) events.push_back(ev.second);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.front(), "gimbal_camera acquired");
}

TEST(SensorRig, LossEventWhenTargetLeaves) {
  SensorsConfig cfg = noiseless();
  MavTruth mav;
  mav.p = Vec3(0.0, 0.0, -3.0);
  mavland::SensorRig rig(cfg, {}, kOrigin, 15);
  std::vector<std::pair<double, std::string>> events;
  for (int k = 0; k <= 100; ++k) {
    const double t = k * 0.01;
    GvTruth gv;
    if (t >= 0.5) gv.p = Vec3(100.0, 0.0, 0.0);
    rig.poll(t, mav, gv, GimbalAngles{0.0, -M_PI / 2.0}, MissionPhase::Approach);
    rig.collect_due(t);
    for (auto& ev : rig.drain_events()) events.push_back(std::move(ev));
  }
  ASSERT_GE(events.size(), 2u);
  EXPECT_EQ(events[0].second, "gimbal_camera acquired");
  bool lost = false;
  for (const auto& ev : events) lost = lost || ev.second == "gimbal_camera lost";
  EXPECT_TRUE(lost);
}

}  // namespace
