#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mavland/sim.hpp"

namespace mavland {

namespace detail {

inline constexpr double kDeg = M_PI / 180.0;

/// Tracks key consumption inside one JSON object so done() can reject typos
/// with their full path.
class Section {
 public:
  Section(const nlohmann::json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) {
      throw std::invalid_argument("config: expected an object at " + path_);
    }
  }

  bool present() const { return j_ != nullptr; }

  bool has(const std::string& key) const { return j_ && j_->contains(key); }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw std::invalid_argument("config: missing key " + path_ + "/" + key);
    return fetch<T>(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return fetch<T>(key);
  }

  Vec3 get_vec3(const std::string& key, const Vec3& fallback) {
    if (!has(key)) return fallback;
    const auto v = fetch<std::vector<double>>(key);
    if (v.size() != 3) {
      throw std::invalid_argument("config: " + path_ + "/" + key + " must have 3 entries");
    }
    return Vec3(v[0], v[1], v[2]);
  }

  /// Child object; missing key yields an absent section whose gets all fall back.
  Section child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return Section(nullptr, path_ + "/" + key);
    return Section(&j_->at(key), path_ + "/" + key);
  }

  const nlohmann::json* array(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return nullptr;
    const nlohmann::json& a = j_->at(key);
    if (!a.is_array()) throw std::invalid_argument("config: " + path_ + "/" + key + " must be an array");
    return &a;
  }

  std::string path() const { return path_; }

  void done() const {
    if (!j_) return;
    for (const auto& item : j_->items()) {
      if (!used_.count(item.key())) {
        throw std::invalid_argument("config: unknown key " + path_ + "/" + item.key());
      }
    }
  }

 private:
  template <class T>
  T fetch(const std::string& key) {
    used_.insert(key);
    try {
      return j_->at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument("config: bad value type at " + path_ + "/" + key);
    }
  }

  const nlohmann::json* j_;
  std::string path_;
  std::set<std::string> used_;
};

inline SensorKind outage_kind(const std::string& name, const std::string& path) {
  if (name == "ins") return SensorKind::InsFull;
  if (name == "phone_gps") return SensorKind::GvGpsWithHeading;
  if (name == "phone_imu") return SensorKind::GvPhoneImu;
  if (name == "gimbal_camera") return SensorKind::GimbalCamera;
  if (name == "bottom_camera") return SensorKind::BottomCamera;
  throw std::invalid_argument("config: unknown sensor name at " + path);
}

inline std::string outage_name(SensorKind k) {
  switch (k) {
    case SensorKind::InsFull:           return "ins";
    case SensorKind::GvGpsWithHeading:
    case SensorKind::GvGpsPositionOnly: return "phone_gps";
    case SensorKind::GvPhoneImu:        return "phone_imu";
    case SensorKind::GimbalCamera:      return "gimbal_camera";
    case SensorKind::BottomCamera:      return "bottom_camera";
  }
  return "?";
}

inline void parse_timing(Section& parent, const std::string& key, SensorTiming& timing) {
  Section s = parent.child(key);
  timing.rate = s.get("rate_hz", timing.rate);
  timing.latency = s.get("latency_s", timing.latency);
  timing.dropout = s.get("dropout", timing.dropout);
  s.done();
  if (!(timing.rate > 0.0)) throw std::invalid_argument("config: " + parent.path() + "/" + key + "/rate_hz must be > 0");
  if (timing.latency < 0.0) throw std::invalid_argument("config: " + parent.path() + "/" + key + "/latency_s must be >= 0");
  if (timing.dropout < 0.0 || timing.dropout > 1.0) {
    throw std::invalid_argument("config: " + parent.path() + "/" + key + "/dropout must be in [0,1]");
  }
}

inline void parse_camera(Section& parent, const std::string& key, CameraModel& m) {
  Section s = parent.child(key);
  m.max_range = s.get("max_range_m", m.max_range);
  m.min_range = s.get("min_range_m", m.min_range);
  m.fov = s.get("fov_deg", m.fov / kDeg) * kDeg;
  m.tag_side = s.get("tag_side_m", m.tag_side);
  m.min_subtend = s.get("min_subtend_deg", m.min_subtend / kDeg) * kDeg;
  s.done();
  if (!(m.fov > 0.0 && m.fov < 2.0 * M_PI)) {
    throw std::invalid_argument("config: " + parent.path() + "/" + key + "/fov_deg out of range");
  }
  if (!(m.max_range > m.min_range && m.min_range >= 0.0)) {
    throw std::invalid_argument("config: " + parent.path() + "/" + key + " needs max_range_m > min_range_m >= 0");
  }
}

}  // namespace detail

/// Strict scenario parse: every section optional, every key defaulted, any
/// unknown key rejected with its path.
inline Scenario scenario_from_json(const nlohmann::json& root) {
  using detail::kDeg;
  Scenario out;
  detail::Section top(&root, "");

  {
    detail::Section s = top.child("scenario");
    out.name = s.get<std::string>("name", out.name);
    out.duration = s.get("duration_s", out.duration);
    out.Ts = s.get("ts_s", out.Ts);
    out.seed = s.get("seed", out.seed);
    out.mav_start = s.get_vec3("mav_start_ned", out.mav_start);
    out.mav_start_heading = s.get("mav_start_heading_deg", out.mav_start_heading / kDeg) * kDeg;
    out.cruise_altitude = s.get("cruise_altitude_m", out.cruise_altitude);
    out.pad_half_width = s.get("pad_half_width_m", out.pad_half_width);
    out.gimbal_rate_limit = s.get("gimbal_rate_limit_deg_s", out.gimbal_rate_limit / kDeg) * kDeg;
    detail::Section o = s.child("origin");
    out.origin.latitude = o.get("lat_deg", out.origin.latitude / kDeg) * kDeg;
    out.origin.longitude = o.get("lon_deg", out.origin.longitude / kDeg) * kDeg;
    out.origin.altitude = o.get("alt_m", out.origin.altitude);
    o.done();
    s.done();
  }
  {
    detail::Section s = top.child("filter");
    out.q_wm = s.get("q_wm", out.q_wm);
    out.q_wa = s.get("q_wa", out.q_wa);
    out.ins_noise.inflate = s.get("ins_velocity_inflation", out.ins_noise.inflate);
    detail::Section ins = s.child("ins");
    out.ins_noise.pos_std = ins.get("pos_std_m", out.ins_noise.pos_std);
    out.ins_noise.vel_std_approach = ins.get("vel_std_approach_mps", out.ins_noise.vel_std_approach);
    out.ins_noise.vel_std_landing = ins.get("vel_std_landing_mps", out.ins_noise.vel_std_landing);
    out.ins_noise.accel_std = ins.get("accel_std_mps2", out.ins_noise.accel_std);
    ins.done();
    s.done();
  }
  {
    detail::Section s = top.child("guidance");
    GuidanceGains& g = out.gains;
    g.lambda = s.get("lambda", g.lambda);
    g.Kp_par = s.get("kp_par", g.Kp_par);
    g.Kd_par = s.get("kd_par", g.Kd_par);
    g.Kp = s.get("kp", g.Kp);
    g.Ki = s.get("ki", g.Ki);
    g.Kd = s.get("kd", g.Kd);
    g.switch_in = s.get("switch_in_m", g.switch_in);
    g.switch_out = s.get("switch_out_m", g.switch_out);
    g.descend_vz = s.get("descend_vz_mps", g.descend_vz);
    g.disarm_height = s.get("disarm_height_m", g.disarm_height);
    g.attitude_limit = s.get("attitude_limit_deg", g.attitude_limit / kDeg) * kDeg;
    g.integral_clamp = s.get("integral_clamp", g.integral_clamp);
    g.stab_pos = s.get("stab_pos_m", g.stab_pos);
    g.stab_vel = s.get("stab_vel_mps", g.stab_vel);
    g.stab_hold = s.get("stab_hold_s", g.stab_hold);
    g.project_closing = s.get("project_closing", g.project_closing);
    s.done();
  }
  {
    detail::Section s = top.child("mav");
    MavParams& m = out.mav;
    m.mass = s.get("mass_kg", m.mass);
    m.kd = s.get("kd", m.kd);
    m.g = s.get("g_mps2", m.g);
    m.tau_att = s.get("tau_att_s", m.tau_att);
    m.tau_vz = s.get("tau_vz_s", m.tau_vz);
    m.alt_kp = s.get("alt_kp", m.alt_kp);
    s.done();
  }
  {
    detail::Section s = top.child("gv_profile");
    GvProfile& p = out.gv;
    p.start = s.get_vec3("start_ned", p.start);
    p.start_heading = s.get("start_heading_deg", p.start_heading / kDeg) * kDeg;
    p.start_speed = s.get("start_speed_mps", p.start_speed);
    if (const nlohmann::json* arr = s.array("segments")) {
      double entry_speed = p.start_speed;
      int idx = 0;
      for (const auto& item : *arr) {
        const std::string path = s.path() + "/segments/" + std::to_string(idx++);
        detail::Section seg(&item, path);
        GvSegment g;
        const std::string type = seg.require<std::string>("type");
        if (type == "straight") {
          g.type = GvSegment::Type::Straight;
        } else if (type == "arc") {
          g.type = GvSegment::Type::Arc;
          g.radius = seg.require<double>("radius_m");
          const std::string turn = seg.get<std::string>("turn", "right");
          if (turn != "left" && turn != "right") {
            throw std::invalid_argument("config: " + path + "/turn must be left or right");
          }
          g.turn = turn == "right" ? 1 : -1;
        } else {
          throw std::invalid_argument("config: " + path + "/type must be straight or arc");
        }
        g.target_speed = seg.get("target_speed_mps", entry_speed);
        const bool has_len = seg.has("length_m");
        const bool has_dur = seg.has("duration_s");
        if (has_len == has_dur) {
          throw std::invalid_argument("config: " + path + " needs exactly one of length_m/duration_s");
        }
        if (has_len) {
          g.length = seg.require<double>("length_m");
        } else {
          const double duration = seg.require<double>("duration_s");
          g.length = 0.5 * (entry_speed + g.target_speed) * duration;
        }
        g.grade = seg.get("grade_pct", g.grade);
        seg.done();
        p.segments.push_back(g);
        entry_speed = g.target_speed;
      }
    }
    s.done();
  }
  {
    detail::Section s = top.child("sensors");
    SensorsConfig& c = out.sensors;
    detail::parse_timing(s, "ins", c.ins);
    detail::parse_timing(s, "phone_gps", c.phone_gps);
    detail::parse_timing(s, "phone_imu", c.phone_imu);
    detail::parse_timing(s, "gimbal_camera", c.gimbal_camera);
    detail::parse_timing(s, "bottom_camera", c.bottom_camera);
    c.ins_pos_std = s.get("ins_pos_std_m", c.ins_pos_std);
    c.ins_vel_std = s.get("ins_vel_std_mps", c.ins_vel_std);
    c.ins_accel_std = s.get("ins_accel_std_mps2", c.ins_accel_std);
    c.gps_horiz_std = s.get("gps_horiz_std_m", c.gps_horiz_std);
    c.gps_vert_std = s.get("gps_vert_std_m", c.gps_vert_std);
    c.gps_speed_std = s.get("gps_speed_std_mps", c.gps_speed_std);
    c.gps_heading_std = s.get("gps_heading_std_deg", c.gps_heading_std / detail::kDeg) * detail::kDeg;
    c.imu_accel_std = s.get("imu_accel_std_mps2", c.imu_accel_std);
    c.gimbal_true_std = s.get("gimbal_true_std_m", c.gimbal_true_std);
    c.bottom_true_std = s.get("bottom_true_std_m", c.bottom_true_std);
    c.gimbal_declared_std = s.get("gimbal_declared_std_m", c.gimbal_declared_std);
    c.bottom_declared_std = s.get("bottom_declared_std_m", c.bottom_declared_std);
    detail::parse_camera(s, "gimbal_model", c.gimbal_model);
    detail::parse_camera(s, "bottom_model", c.bottom_model);
    {
      detail::Section op = s.child("over_pad");
      c.over_pad_beta = op.get("beta", c.over_pad_beta);
      c.over_pad_radius = op.get("radius_m", c.over_pad_radius);
      c.over_pad_height = op.get("height_m", c.over_pad_height);
      op.done();
    }
    if (const nlohmann::json* arr = s.array("outages")) {
      int idx = 0;
      for (const auto& item : *arr) {
        const std::string path = s.path() + "/outages/" + std::to_string(idx++);
        detail::Section w(&item, path);
        OutageWindow o;
        o.kind = detail::outage_kind(w.require<std::string>("sensor"), path + "/sensor");
        o.t_begin = w.require<double>("t_begin_s");
        o.t_end = w.require<double>("t_end_s");
        w.done();
        c.outages.push_back(o);
      }
    }
    s.done();
  }
  top.done();
  validate(out);
  return out;
}

/// Complete inverse of scenario_from_json; used to echo the effective config.
inline nlohmann::json scenario_to_json(const Scenario& sc) {
  using detail::kDeg;
  nlohmann::json j;
  j["scenario"] = {
      {"name", sc.name},
      {"duration_s", sc.duration},
      {"ts_s", sc.Ts},
      {"seed", sc.seed},
      {"mav_start_ned", {sc.mav_start.x(), sc.mav_start.y(), sc.mav_start.z()}},
      {"mav_start_heading_deg", sc.mav_start_heading / kDeg},
      {"cruise_altitude_m", sc.cruise_altitude},
      {"pad_half_width_m", sc.pad_half_width},
      {"gimbal_rate_limit_deg_s", sc.gimbal_rate_limit / kDeg},
      {"origin", {{"lat_deg", sc.origin.latitude / kDeg},
                  {"lon_deg", sc.origin.longitude / kDeg},
                  {"alt_m", sc.origin.altitude}}},
  };
  j["filter"] = {
      {"q_wm", sc.q_wm},
      {"q_wa", sc.q_wa},
      {"ins_velocity_inflation", sc.ins_noise.inflate},
      {"ins", {{"pos_std_m", sc.ins_noise.pos_std},
               {"vel_std_approach_mps", sc.ins_noise.vel_std_approach},
               {"vel_std_landing_mps", sc.ins_noise.vel_std_landing},
               {"accel_std_mps2", sc.ins_noise.accel_std}}},
  };
  j["guidance"] = {
      {"lambda", sc.gains.lambda},
      {"kp_par", sc.gains.Kp_par},
      {"kd_par", sc.gains.Kd_par},
      {"kp", sc.gains.Kp},
      {"ki", sc.gains.Ki},
      {"kd", sc.gains.Kd},
      {"switch_in_m", sc.gains.switch_in},
      {"switch_out_m", sc.gains.switch_out},
      {"descend_vz_mps", sc.gains.descend_vz},
      {"disarm_height_m", sc.gains.disarm_height},
      {"attitude_limit_deg", sc.gains.attitude_limit / kDeg},
      {"integral_clamp", sc.gains.integral_clamp},
      {"stab_pos_m", sc.gains.stab_pos},
      {"stab_vel_mps", sc.gains.stab_vel},
      {"stab_hold_s", sc.gains.stab_hold},
      {"project_closing", sc.gains.project_closing},
  };
  j["mav"] = {
      {"mass_kg", sc.mav.mass}, {"kd", sc.mav.kd},       {"g_mps2", sc.mav.g},
      {"tau_att_s", sc.mav.tau_att}, {"tau_vz_s", sc.mav.tau_vz}, {"alt_kp", sc.mav.alt_kp},
  };
  nlohmann::json segments = nlohmann::json::array();
  for (const GvSegment& g : sc.gv.segments) {
    nlohmann::json seg = {
        {"type", g.type == GvSegment::Type::Straight ? "straight" : "arc"},
        {"length_m", g.length},
        {"target_speed_mps", g.target_speed},
        {"grade_pct", g.grade},
    };
    if (g.type == GvSegment::Type::Arc) {
      seg["radius_m"] = g.radius;
      seg["turn"] = g.turn >= 0 ? "right" : "left";
    }
    segments.push_back(seg);
  }
  j["gv_profile"] = {
      {"start_ned", {sc.gv.start.x(), sc.gv.start.y(), sc.gv.start.z()}},
      {"start_heading_deg", sc.gv.start_heading / kDeg},
      {"start_speed_mps", sc.gv.start_speed},
      {"segments", segments},
  };
  auto timing = [](const SensorTiming& t) {
    return nlohmann::json{{"rate_hz", t.rate}, {"latency_s", t.latency}, {"dropout", t.dropout}};
  };
  auto camera = [](const CameraModel& m) {
    return nlohmann::json{{"max_range_m", m.max_range},
                          {"min_range_m", m.min_range},
                          {"fov_deg", m.fov / kDeg},
                          {"tag_side_m", m.tag_side},
                          {"min_subtend_deg", m.min_subtend / kDeg}};
  };
  nlohmann::json outages = nlohmann::json::array();
  for (const OutageWindow& o : sc.sensors.outages) {
    outages.push_back({{"sensor", detail::outage_name(o.kind)},
                       {"t_begin_s", o.t_begin},
                       {"t_end_s", o.t_end}});
  }
  j["sensors"] = {
      {"ins", timing(sc.sensors.ins)},
      {"phone_gps", timing(sc.sensors.phone_gps)},
      {"phone_imu", timing(sc.sensors.phone_imu)},
      {"gimbal_camera", timing(sc.sensors.gimbal_camera)},
      {"bottom_camera", timing(sc.sensors.bottom_camera)},
      {"ins_pos_std_m", sc.sensors.ins_pos_std},
      {"ins_vel_std_mps", sc.sensors.ins_vel_std},
      {"ins_accel_std_mps2", sc.sensors.ins_accel_std},
      {"gps_horiz_std_m", sc.sensors.gps_horiz_std},
      {"gps_vert_std_m", sc.sensors.gps_vert_std},
      {"gps_speed_std_mps", sc.sensors.gps_speed_std},
      {"gps_heading_std_deg", sc.sensors.gps_heading_std / kDeg},
      {"imu_accel_std_mps2", sc.sensors.imu_accel_std},
      {"gimbal_true_std_m", sc.sensors.gimbal_true_std},
      {"bottom_true_std_m", sc.sensors.bottom_true_std},
      {"gimbal_declared_std_m", sc.sensors.gimbal_declared_std},
      {"bottom_declared_std_m", sc.sensors.bottom_declared_std},
      {"gimbal_model", camera(sc.sensors.gimbal_model)},
      {"bottom_model", camera(sc.sensors.bottom_model)},
      {"over_pad", {{"beta", sc.sensors.over_pad_beta},
                    {"radius_m", sc.sensors.over_pad_radius},
                    {"height_m", sc.sensors.over_pad_height}}},
      {"outages", outages},
  };
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  try {
    return scenario_from_json(root);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace mavland
