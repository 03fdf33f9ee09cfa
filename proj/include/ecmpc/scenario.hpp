#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ecmpc/error_model.hpp"
#include "ecmpc/gait.hpp"
#include "ecmpc/metrics.hpp"
#include "ecmpc/mpc_controller.hpp"
#include "ecmpc/sim_world.hpp"

namespace ecmpc {

/// What the error series compares the measurement against.
///   prediction: the MPC's uncompensated one-step state prediction
///   command:    the commanded attitude and height
enum class ErrorReference { Prediction, Command };

/// online: refit on the live buffer every refit_every ticks.
/// prefit: fit once on an uncompensated calibration run of the same scenario
///         (seed + 1) and keep that model fixed.
enum class FitMode { Online, Prefit };

struct ErrorModelSettings {
  FitMode mode = FitMode::Prefit;
  bool auto_order = false;
  int ar_order = 2;
  int ma_order = 0;
  double alpha = 0.95;
  int max_k = 2;
  std::size_t capacity = 2000;
  int refit_every = 250;
  std::size_t fit_window = 0;
  std::size_t min_samples = 120;
  bool input_gain = true;
  bool adequacy_gating = false;
  ErrorReference reference = ErrorReference::Command;
};

struct NoiseSettings {
  double attitude = 1e-3;          // rad
  double position = 1e-3;          // m
  double angular_velocity = 1e-3;  // rad/s
  double velocity = 1e-3;          // m/s
};

/// Command change at `time`: body-frame velocity and yaw rate.
struct CommandSegment {
  double time = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
};

struct ScenarioConfig {
  std::string name = "custom";
  double duration = 30.0;
  double warmup = 2.0;
  std::uint64_t seed = 1;
  bool compensation = false;
  double initial_height = 0.38;

  SimParams sim;          // true plant, payload schedule, fall thresholds
  MpcConfig mpc;          // control model and weights
  GaitSchedule gait;
  BodyGeometry geometry;
  MotionCommand command;  // height and attitude; velocities from the profile
  std::vector<CommandSegment> command_profile;
  NoiseSettings noise;
  ErrorModelSettings error_model;
  /// Prefit mode: use this model instead of running a calibration pass.
  std::optional<InputAwareErrorModel> prefit_model;
};

/// ground_truth, wrong_mass, payload_8kg
std::vector<std::string> scenario_names();
ScenarioConfig scenario_preset(const std::string& name);

ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& cfg, int indent = 2);
/// Preset name or path to a JSON scenario file.
ScenarioConfig load_scenario(const std::string& name_or_path);

struct ScenarioResult {
  RunMetrics metrics;
  Telemetry telemetry;
  ErrorBuffer error_log{std::numeric_limits<std::size_t>::max()};
  bool diverged = false;        // fell over
  bool solver_failure = false;  // two consecutive infeasible ticks
  int compensated_ticks = 0;
  int refits = 0;
  int failed_refits = 0;
  std::optional<InputAwareErrorModel> final_model;
};

/// Runs the closed loop: truth simulation, noisy measurement, error model,
/// MPC. Deterministic for a given config. `qp_dump` receives every QP when
/// set.
ScenarioResult run_scenario(const ScenarioConfig& cfg, std::ostream* qp_dump = nullptr);

/// Calibration pass for prefit mode: runs `cfg` without compensation under
/// seed + 1 and fits the configured order to its post-warmup error log.
/// The model is marked usable when it passes the adequacy check or gating is
/// off; otherwise nullopt.
std::optional<InputAwareErrorModel> calibrate_error_model(const ScenarioConfig& cfg);

struct ComparisonReport {
  ScenarioResult baseline;
  ScenarioResult compensated;
  double vibration_reduction = 0.0;   // % of baseline peak-to-peak height
  double height_offset_reduction = 0.0;  // % of baseline |mean height - desired|
  Vector4 mae_reduction = Vector4::Zero();
  Vector4 mse_reduction = Vector4::Zero();
};

/// Runs compensation off and on with the same seed; the two runs go in
/// parallel. In prefit mode the compensated run first does its calibration
/// pass.
ComparisonReport paired_compare(const ScenarioConfig& cfg);
ComparisonReport make_report(ScenarioResult baseline, ScenarioResult compensated, double desired_height);

/// time, height_baseline, height_compensated, fz_sum_baseline, fz_sum_compensated
void write_comparison_csv(std::ostream& out, const ComparisonReport& report);
std::string report_json(const ComparisonReport& report, int indent = 2);

}  // namespace ecmpc
