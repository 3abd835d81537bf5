#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mavland/config.hpp"
#include "mavland/sensors.hpp"
#include "mavland/sim.hpp"

namespace mavland {

/// 9 significant digits: stable golden files, parse/format idempotent.
inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// 17 significant digits: exact double round trip, used for replayable data.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kTrajectoryHeader =
    "t,px_m,py_m,pz_m,vx_m,vy_m,vz_m,px_a,py_a,pz_a,vx_a,vy_a,vz_a,"
    "est_px_m,est_py_m,est_pz_m,est_vx_m,est_vy_m,est_vz_m,"
    "est_px_a,est_py_a,est_pz_a,est_vx_a,est_vy_a,est_vz_a,"
    "est_valid,phi,theta,psi,gimbal_pan,gimbal_tilt,psi_cmd,thrust_cmd,"
    "phase,theta_cmd,phi_cmd";

inline void write_trajectory_csv(const std::string& path, const SimLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << kTrajectoryHeader << "\n";
  for (const TickRecord& r : log.ticks) {
    out << fmt9(r.t);
    for (int i = 0; i < 3; ++i) out << ',' << fmt9(r.mav.p[i]);
    for (int i = 0; i < 3; ++i) out << ',' << fmt9(r.mav.v[i]);
    for (int i = 0; i < 3; ++i) out << ',' << fmt9(r.gv.p[i]);
    for (int i = 0; i < 3; ++i) out << ',' << fmt9(r.gv.v[i]);
    for (int i = 0; i < 6; ++i) out << ',' << fmt9(r.est_mean[i]);    // MAV p, v
    for (int i = 9; i < 15; ++i) out << ',' << fmt9(r.est_mean[i]);   // pad p, v
    out << ',' << (r.est_valid ? 1 : 0)
        << ',' << fmt9(r.mav.phi) << ',' << fmt9(r.mav.theta) << ',' << fmt9(r.mav.psi)
        << ',' << fmt9(r.gimbal.pan) << ',' << fmt9(r.gimbal.tilt)
        << ',' << fmt9(r.cmd.psi) << ',' << fmt9(r.cmd.thrust)
        << ',' << to_string(r.phase)
        << ',' << fmt9(r.cmd.theta) << ',' << fmt9(r.cmd.phi) << "\n";
  }
}

inline void write_events_csv(const std::string& path, const SimLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,event\n";
  for (const Event& e : log.events) out << fmt9(e.t) << ',' << e.what << "\n";
}

inline constexpr const char* kMeasurementsHeader = "t,kind,n,z0,z1,z2,z3,z4,z5,z6,z7,z8,aux1,aux2";

/**
 * Replayable measurement stream in delivery order at full double precision.
 * aux1/aux2 carry the context a replay needs to rebuild H and R exactly:
 * the phase index for INS rows, the measured speed/course for GPS fixes.
 */
inline void write_measurements_csv(const std::string& path, const SimLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << kMeasurementsHeader << "\n";
  for (const SensorRecord& rec : log.measurements) {
    out << fmt17(rec.m.timestamp) << ',' << to_string(rec.m.kind) << ',' << rec.m.z.size();
    for (int i = 0; i < 9; ++i) out << ',' << (i < rec.m.z.size() ? fmt17(rec.m.z[i]) : "0");
    out << ',' << fmt17(rec.aux1) << ',' << fmt17(rec.aux2) << "\n";
  }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/**
 * Rebuilds the measurement stream written by write_measurements_csv through
 * the same builder functions, given the scenario whose config shaped the
 * declared noise models. Output is bit-identical to the live stream.
 */
inline std::vector<Measurement> load_measurements_csv(const std::string& path, const Scenario& sc) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMeasurementsHeader) {
    throw std::runtime_error(path + ": unexpected measurements header");
  }
  std::vector<Measurement> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 14) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": want 14 fields");
    }
    const double t = std::stod(f[0]);
    SensorKind kind;
    if (!sensor_kind_from_string(f[1], kind)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown kind " + f[1]);
    }
    const int n = std::stoi(f[2]);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = std::stod(f[3 + static_cast<std::size_t>(i)]);
    const double aux1 = std::stod(f[12]);
    const double aux2 = std::stod(f[13]);
    switch (kind) {
      case SensorKind::InsFull:
        out.push_back(ins_measurement(t, z.segment<3>(0), z.segment<3>(3), z.segment<3>(6),
                                      static_cast<MissionPhase>(static_cast<int>(aux1)),
                                      sc.ins_noise));
        break;
      case SensorKind::GvGpsWithHeading:
        out.push_back(gv_gps_measurement_ned(t, z.segment<3>(0), aux2, aux1,
                                             gps_device_covariance(aux1, aux2, sc.sensors)));
        break;
      case SensorKind::GvGpsPositionOnly:
        out.push_back(gv_gps_measurement_ned(t, z.segment<3>(0), 0.0, 0.0,
                                             gps_device_covariance(0.0, 0.0, sc.sensors)));
        break;
      case SensorKind::GimbalCamera:
        out.push_back(relative_camera_measurement(t, kind, z, Rotation::Identity(),
                                                  sc.sensors.gimbal_declared_std));
        break;
      case SensorKind::BottomCamera:
        out.push_back(relative_camera_measurement(t, kind, z, Rotation::Identity(),
                                                  sc.sensors.bottom_declared_std));
        break;
      case SensorKind::GvPhoneImu:
        out.push_back(gv_imu_measurement(t, z, sc.sensors.imu_accel_std));
        break;
    }
  }
  return out;
}

namespace detail {

inline void put_if_finite(nlohmann::json& j, const char* key, double v) {
  if (std::isfinite(v)) j[key] = v;
}

inline nlohmann::json outcome_json(const Outcome& o) {
  nlohmann::json j;
  j["kind"] = to_string(o.kind);
  put_if_finite(j, "lateral_error_m", o.lateral_error_m);
  put_if_finite(j, "touchdown_rel_speed_mps", o.touchdown_rel_speed_mps);
  put_if_finite(j, "time_to_land_s", o.time_to_land_s);
  put_if_finite(j, "rel_speed_at_descent_mps", o.rel_speed_at_descent_mps);
  return j;
}

}  // namespace detail

inline void write_summary_json(const std::string& path, const Scenario& sc, const SimLog& log) {
  nlohmann::json j;
  j["scenario"] = sc.name;
  j["seed"] = sc.seed;
  j["outcome"] = detail::outcome_json(log.outcome);
  j["duration_simulated_s"] = log.facts.t_end;
  nlohmann::json counts;
  for (int i = 0; i < kSensorKindCount; ++i) {
    counts[to_string(static_cast<SensorKind>(i))] = log.update_counts[static_cast<std::size_t>(i)];
  }
  j["filter_updates"] = counts;
  j["dropped_stale"] = log.dropped_stale;
  nlohmann::json events = nlohmann::json::array();
  for (const Event& e : log.events) events.push_back({{"t", e.t}, {"event", e.what}});
  j["events"] = events;
  j["effective_config"] = scenario_to_json(sc);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline void write_mc_summary_json(const std::string& path, const Scenario& sc,
                                  const McSummary& mc) {
  nlohmann::json j;
  j["scenario"] = sc.name;
  j["runs"] = mc.runs;
  j["base_seed"] = mc.base_seed;
  j["success_rate"] = mc.success_rate;
  detail::put_if_finite(j, "lateral_error_p50", mc.lateral_error_p50);
  detail::put_if_finite(j, "lateral_error_p95", mc.lateral_error_p95);
  detail::put_if_finite(j, "time_to_land_mean", mc.time_to_land_mean);
  nlohmann::json per_run = nlohmann::json::array();
  for (const RunResult& r : mc.per_run) {
    nlohmann::json row = detail::outcome_json(r.outcome);
    row["seed"] = r.seed;
    per_run.push_back(row);
  }
  j["per_run"] = per_run;
  j["effective_config"] = scenario_to_json(sc);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace mavland
