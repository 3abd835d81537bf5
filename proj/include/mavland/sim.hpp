#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mavland/filter.hpp"
#include "mavland/geo.hpp"
#include "mavland/guidance.hpp"
#include "mavland/mission.hpp"
#include "mavland/sensors.hpp"
#include "mavland/vehicles.hpp"

namespace mavland {

struct Scenario {
  std::string name{"unnamed"};
  double duration{60.0};
  double Ts{0.01};
  std::uint64_t seed{1};

  Vec3 mav_start{-30.0, 0.0, -10.0};  // NED
  double mav_start_heading{0.0};
  double cruise_altitude{10.0};  // m above the NED origin plane
  double pad_half_width{0.5};    // m, touchdown bound
  double gimbal_rate_limit{M_PI};  // rad/s

  GeodeticPoint origin{45.0 * M_PI / 180.0, 7.0 * M_PI / 180.0, 100.0};

  GvProfile gv;
  GuidanceGains gains;
  MavParams mav;
  InsNoise ins_noise;
  double q_wm{4.0};
  double q_wa{2.0};
  SensorsConfig sensors;
};

inline void validate(const Scenario& sc) {
  if (!(sc.duration > 0.0)) throw std::invalid_argument("scenario: duration must be > 0");
  if (!(sc.Ts > 0.0 && sc.Ts <= 0.02)) throw std::invalid_argument("scenario: Ts outside (0, 0.02]");
  if (!(sc.cruise_altitude > sc.gains.disarm_height)) {
    throw std::invalid_argument("scenario: cruise altitude must exceed the disarm height");
  }
  if (!(sc.gains.switch_out > sc.gains.switch_in && sc.gains.switch_in > 0.0)) {
    throw std::invalid_argument("scenario: require switch_out > switch_in > 0");
  }
  gv_state(sc.gv, 0.0);  // surfaces malformed profiles before the run
}

struct Outcome {
  enum class Kind { Landed, Timeout, LostTarget, Crash };
  Kind kind{Kind::Timeout};
  double lateral_error_m{std::numeric_limits<double>::quiet_NaN()};
  double touchdown_rel_speed_mps{std::numeric_limits<double>::quiet_NaN()};
  double time_to_land_s{std::numeric_limits<double>::quiet_NaN()};
  double rel_speed_at_descent_mps{std::numeric_limits<double>::quiet_NaN()};
};

inline const char* to_string(Outcome::Kind k) {
  switch (k) {
    case Outcome::Kind::Landed:     return "Landed";
    case Outcome::Kind::Timeout:    return "Timeout";
    case Outcome::Kind::LostTarget: return "LostTarget";
    case Outcome::Kind::Crash:      return "Crash";
  }
  return "?";
}

struct TickRecord {
  double t{0.0};
  MavTruth mav;
  GvTruth gv;
  bool est_valid{false};
  Vec18 est_mean = Vec18::Zero();
  Vec18 est_cov_diag = Vec18::Zero();
  GuidanceCommand cmd;
  MissionPhase phase{MissionPhase::Approach};
  GimbalAngles gimbal;
};

struct Event {
  double t{0.0};
  std::string what;
};

/// Raw end-of-run facts; classify_outcome turns them into an Outcome.
struct TerminalFacts {
  bool disarmed{false};
  bool contact_before_disarm{false};
  double t_end{0.0};
  double t_disarm{std::numeric_limits<double>::quiet_NaN()};
  double lateral_at_end{std::numeric_limits<double>::quiet_NaN()};
  double rel_speed_at_end{std::numeric_limits<double>::quiet_NaN()};
  double initial_separation{0.0};
  double final_separation{0.0};
  double rel_speed_at_descent{std::numeric_limits<double>::quiet_NaN()};
};

struct SimLog {
  std::vector<TickRecord> ticks;
  std::vector<Event> events;
  std::vector<SensorRecord> measurements;  // delivery order, with replay aux
  TerminalFacts facts;
  Outcome outcome;
  long dropped_stale{0};
  std::array<long, kSensorKindCount> update_counts{};
};

/**
 * Landed needs a disarm inside the touchdown bounds; contact before disarm or
 * disarm outside the bounds is a Crash. Runs that merely hit the duration
 * split into LostTarget (separation blew up) versus Timeout (ran out of time).
 */
inline Outcome classify_outcome(const SimLog& log, double pad_half_width) {
  const TerminalFacts& f = log.facts;
  Outcome out;
  out.rel_speed_at_descent_mps = f.rel_speed_at_descent;
  out.lateral_error_m = f.lateral_at_end;
  out.touchdown_rel_speed_mps = f.rel_speed_at_end;
  if (f.contact_before_disarm) {
    out.kind = Outcome::Kind::Crash;
    return out;
  }
  if (f.disarmed) {
    const bool on_pad = f.lateral_at_end <= pad_half_width;
    const bool gentle = f.rel_speed_at_end <= 1.0;
    out.kind = on_pad && gentle ? Outcome::Kind::Landed : Outcome::Kind::Crash;
    out.time_to_land_s = f.t_disarm;
    return out;
  }
  out.kind = f.final_separation > 2.0 * f.initial_separation + 5.0 ? Outcome::Kind::LostTarget
                                                                   : Outcome::Kind::Timeout;
  return out;
}

struct RunOptions {
  bool record_ticks{true};
  bool record_measurements{true};
};

inline SimLog run_scenario(const Scenario& sc, const RunOptions& opts = {}) {
  validate(sc);
  const double Ts = sc.Ts;
  SimLog log;

  Estimator estimator(make_process_model(Ts, sc.q_wm, sc.q_wa));
  SensorRig rig(sc.sensors, sc.ins_noise, sc.origin, sc.seed);

  MavTruth mav;
  mav.p = sc.mav_start;
  mav.psi = sc.mav_start_heading;

  MissionPhase phase = MissionPhase::Approach;
  GimbalAngles gimbal{0.0, 0.0};
  StabilizationMonitor stab;
  Vec3 pid_integral = Vec3::Zero();
  double psi_cmd = sc.mav_start_heading;

  log.facts.initial_separation = (mav.p - gv_state(sc.gv, 0.0).p).norm();

  const auto ticks_total = static_cast<std::int64_t>(std::llround(sc.duration / Ts));
  bool terminal = false;

  for (std::int64_t k = 0; k <= ticks_total && !terminal; ++k) {
    const double t = static_cast<double>(k) * Ts;
    const GvTruth gv = gv_state(sc.gv, t);

    if (mav.p.z() >= gv.p.z() && phase != MissionPhase::Disarmed) {
      log.facts.contact_before_disarm = true;
      log.facts.lateral_at_end = std::hypot(mav.p.x() - gv.p.x(), mav.p.y() - gv.p.y());
      log.facts.rel_speed_at_end = (mav.v - gv.v).norm();
      log.events.push_back({t, "contact"});
      terminal = true;
    }

    rig.poll(t, mav, gv, gimbal, phase);
    for (auto& ev : rig.drain_events()) log.events.push_back({ev.first, std::move(ev.second)});
    if (k > 0) estimator.predict_step();
    for (auto& rec : rig.collect_due(t)) {
      estimator.feed(rec.m);
      if (opts.record_measurements) log.measurements.push_back(std::move(rec));
    }

    GuidanceCommand cmd;
    cmd.psi = psi_cmd;
    cmd.thrust = sc.mav.mass * sc.mav.g;
    cmd.vertical = {VerticalMode::AltHold, sc.cruise_altitude};

    if (estimator.initialized() && !terminal) {
      const FilterState& est = estimator.state();
      const Vec3 u = est.pad_position() - est.mav_position();
      const Vec3 udot = est.pad_velocity() - est.mav_velocity();
      const double horizontal_distance = std::hypot(u.x(), u.y());
      const bool stabilized = stab.step(u, udot, sc.gains, Ts);
      const double height_above_pad = est.pad_position().z() - est.mav_position().z();

      const MissionPhase next = select_phase(phase, horizontal_distance, stabilized,
                                             height_above_pad, sc.gains);
      if (next != phase) {
        log.events.push_back({t, std::string("phase ") + to_string(phase) + " -> " + to_string(next)});
        if (next == MissionPhase::Landing) pid_integral.setZero();
        if (next == MissionPhase::Approach) stab.reset();
        if (next == MissionPhase::Descent) {
          log.facts.rel_speed_at_descent = (mav.v - gv.v).norm();
        }
        phase = next;
      }

      if (phase == MissionPhase::Disarmed) {
        log.facts.disarmed = true;
        log.facts.t_disarm = t;
        log.facts.lateral_at_end = std::hypot(mav.p.x() - gv.p.x(), mav.p.y() - gv.p.y());
        log.facts.rel_speed_at_end = (mav.v - gv.v).norm();
        log.events.push_back({t, "disarm"});
        terminal = true;
      }

      psi_cmd = yaw_command(est, psi_cmd);
      Vec3 a_ned = Vec3::Zero();
      if (phase == MissionPhase::Approach) {
        a_ned = approach_acceleration(u, udot, sc.gains).a_perp;
      } else if (phase == MissionPhase::Landing || phase == MissionPhase::Descent) {
        Vec3 u_h = u, udot_h = udot;
        u_h.z() = 0.0;
        udot_h.z() = 0.0;
        const PidResult pid = pid_acceleration(u_h, udot_h, pid_integral, sc.gains, Ts);
        pid_integral = pid.integral;
        a_ned = pid.accel;
        a_ned.z() = 0.0;
      }

      // inversion operates in the zero-yaw controller frame
      const Rotation R_cn = rotation_about_down(psi_cmd).transpose();
      const AttitudeCommand att = accel_to_attitude(R_cn * a_ned, R_cn * est.mav_velocity(),
                                                    sc.mav.mass, sc.mav.kd, sc.mav.g,
                                                    sc.gains.attitude_limit);
      cmd.theta = att.theta;
      cmd.phi = att.phi;
      cmd.psi = psi_cmd;
      cmd.thrust = att.thrust;
      cmd.vertical = vertical_command(phase, est, sc.cruise_altitude, sc.gains.descend_vz);
      if (phase == MissionPhase::Disarmed) {
        cmd.theta = 0.0;
        cmd.phi = 0.0;
        cmd.thrust = 0.0;
      }
      gimbal = point_gimbal(gimbal, u, Ts, sc.gimbal_rate_limit);
    }
    cmd.phase = phase;

    if (opts.record_ticks) {
      TickRecord rec;
      rec.t = t;
      rec.mav = mav;
      rec.gv = gv;
      rec.est_valid = estimator.initialized();
      if (rec.est_valid) {
        rec.est_mean = estimator.state().mean;
        rec.est_cov_diag = estimator.state().covariance.diagonal();
      }
      rec.cmd = cmd;
      rec.phase = phase;
      rec.gimbal = gimbal;
      log.ticks.push_back(rec);
    }

    log.facts.t_end = t;
    log.facts.final_separation = (mav.p - gv.p).norm();

    if (!terminal && k < ticks_total) {
      mav = mav_step(mav, cmd, Ts, sc.mav);
    }
  }

  log.dropped_stale = estimator.dropped_stale();
  log.update_counts = estimator.update_counts();
  log.outcome = classify_outcome(log, sc.pad_half_width);
  return log;
}

struct RunResult {
  std::uint64_t seed{0};
  Outcome outcome;
};

struct McSummary {
  int runs{0};
  std::uint64_t base_seed{0};
  double success_rate{0.0};
  double lateral_error_p50{std::numeric_limits<double>::quiet_NaN()};
  double lateral_error_p95{std::numeric_limits<double>::quiet_NaN()};
  double time_to_land_mean{std::numeric_limits<double>::quiet_NaN()};
  std::vector<RunResult> per_run;
};

namespace detail {

/// Nearest-rank quantile on a pre-sorted vector.
inline double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::ceil(q * n));
  return sorted[std::min(sorted.size() - 1, rank == 0 ? 0 : rank - 1)];
}

inline int mc_threads(int n_runs) {
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SIM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) threads = v;
  }
  return std::max(1, std::min(threads, n_runs));
}

}  // namespace detail

/**
 * n_runs independent scenarios with seeds base_seed + i, executed on a small
 * worker pool (SIM_THREADS caps it) and aggregated in index order, so the
 * summary is identical however the work was scheduled.
 */
inline McSummary run_monte_carlo(const Scenario& sc, int n_runs, std::uint64_t base_seed) {
  if (n_runs < 1) throw std::invalid_argument("run_monte_carlo: n_runs must be >= 1");
  validate(sc);
  std::vector<RunResult> results(static_cast<std::size_t>(n_runs));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const RunOptions light{false, false};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_runs) return;
      try {
        Scenario run_sc = sc;
        run_sc.seed = base_seed + static_cast<std::uint64_t>(i);
        const SimLog log = run_scenario(run_sc, light);
        results[static_cast<std::size_t>(i)] = {run_sc.seed, log.outcome};
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int threads = detail::mc_threads(n_runs);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  McSummary s;
  s.runs = n_runs;
  s.base_seed = base_seed;
  s.per_run = std::move(results);
  std::vector<double> laterals;
  double land_time_sum = 0.0;
  int landed = 0;
  for (const RunResult& r : s.per_run) {
    if (r.outcome.kind == Outcome::Kind::Landed) {
      ++landed;
      land_time_sum += r.outcome.time_to_land_s;
    }
    if (std::isfinite(r.outcome.lateral_error_m)) laterals.push_back(r.outcome.lateral_error_m);
  }
  std::sort(laterals.begin(), laterals.end());
  s.success_rate = static_cast<double>(landed) / static_cast<double>(n_runs);
  s.lateral_error_p50 = detail::quantile(laterals, 0.50);
  s.lateral_error_p95 = detail::quantile(laterals, 0.95);
  if (landed > 0) s.time_to_land_mean = land_time_sum / landed;
  return s;
}

}  // namespace mavland
