// Command-line front end: closed-loop runs, Monte Carlo batches, and the
// drag-coefficient fitting utility. Exit codes: 0 success (run: Landed),
// 1 configuration/input error, 2 run completed without landing.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mavland/config.hpp"
#include "mavland/logio.hpp"
#include "mavland/sim.hpp"
#include "mavland/vehicles.hpp"

namespace {

int cmd_run(const std::string& scenario_path, bool has_seed, std::uint64_t seed,
            const std::string& out_dir) {
  mavland::Scenario sc;
  try {
    sc = mavland::load_scenario(scenario_path);
    if (has_seed) sc.seed = seed;
    std::filesystem::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const mavland::SimLog log = mavland::run_scenario(sc);
  const std::filesystem::path out(out_dir);
  mavland::write_trajectory_csv((out / "trajectory.csv").string(), log);
  mavland::write_events_csv((out / "events.csv").string(), log);
  mavland::write_measurements_csv((out / "measurements.csv").string(), log);
  mavland::write_summary_json((out / "summary.json").string(), sc, log);
  std::cout << sc.name << ": " << to_string(log.outcome.kind);
  if (log.outcome.kind == mavland::Outcome::Kind::Landed) {
    std::cout << " (lateral " << mavland::fmt9(log.outcome.lateral_error_m)
              << " m, rel speed " << mavland::fmt9(log.outcome.touchdown_rel_speed_mps)
              << " m/s, t " << mavland::fmt9(log.outcome.time_to_land_s) << " s)";
  }
  std::cout << "\n";
  return log.outcome.kind == mavland::Outcome::Kind::Landed ? 0 : 2;
}

int cmd_mc(const std::string& scenario_path, int runs, bool has_seed, std::uint64_t seed,
           const std::string& out_dir) {
  mavland::Scenario sc;
  try {
    sc = mavland::load_scenario(scenario_path);
    if (runs < 1) throw std::invalid_argument("mc: --runs must be >= 1");
    std::filesystem::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const std::uint64_t base_seed = has_seed ? seed : sc.seed;
  const mavland::McSummary mc = mavland::run_monte_carlo(sc, runs, base_seed);
  mavland::write_mc_summary_json((std::filesystem::path(out_dir) / "mc_summary.json").string(),
                                 sc, mc);
  std::cout << sc.name << ": " << runs << " runs, success rate "
            << mavland::fmt9(mc.success_rate);
  if (std::isfinite(mc.lateral_error_p95)) {
    std::cout << ", lateral p50/p95 " << mavland::fmt9(mc.lateral_error_p50) << "/"
              << mavland::fmt9(mc.lateral_error_p95) << " m";
  }
  std::cout << "\n";
  return 0;
}

int cmd_fit_drag(const std::string& data_path, double mass, double g) {
  std::ifstream in(data_path);
  if (!in) {
    std::cerr << "error: cannot open " << data_path << "\n";
    return 1;
  }
  std::vector<std::pair<double, double>> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) continue;
    try {
      const double theta_deg = std::stod(a);
      const double vt = std::stod(b);
      samples.emplace_back(theta_deg * M_PI / 180.0, vt);
    } catch (const std::exception&) {
      continue;  // header or malformed row
    }
  }
  if (samples.size() < 2) {
    std::cerr << "error: " << data_path << ": need at least 2 valid (theta_deg, v_t) rows\n";
    return 1;
  }
  mavland::DragFit fit;
  try {
    fit = mavland::fit_drag_coefficient(samples, mass, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::printf("kd = %.6f\n", fit.kd);
  std::printf("residual_rms = %.6f\n", fit.residual_rms);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-vehicle landing simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int runs = 50;
  std::string data_path;
  double mass = 3.4;
  double g = 9.81;

  CLI::App* run = app.add_subcommand("run", "Run one scenario and export its logs");
  run->add_option("--scenario", scenario_path, "Scenario config path")->required();
  CLI::Option* run_seed = run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory (default .)");

  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo batch of seeded runs");
  mc->add_option("--scenario", scenario_path, "Scenario config path")->required();
  mc->add_option("--runs", runs, "Number of runs (default 50)");
  CLI::Option* mc_seed = mc->add_option("--seed", seed, "Base seed (default: scenario seed)");
  mc->add_option("--out", out_dir, "Output directory (default .)");

  CLI::App* fit = app.add_subcommand("fit-drag", "Least-squares drag fit from terminal speeds");
  fit->add_option("data", data_path, "CSV of theta_deg,terminal_speed_mps rows")->required();
  fit->add_option("--mass", mass, "Vehicle mass, kg (default 3.4)");
  fit->add_option("--g", g, "Gravity, m/s^2 (default 9.81)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, run_seed->count() > 0, seed, out_dir);
    if (mc->parsed()) return cmd_mc(scenario_path, runs, mc_seed->count() > 0, seed, out_dir);
    if (fit->parsed()) return cmd_fit_drag(data_path, mass, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
