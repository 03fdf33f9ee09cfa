#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "ecmpc/error_model.hpp"
#include "ecmpc/qp_solver.hpp"
#include "ecmpc/srb_dynamics.hpp"

namespace ecmpc {

/// One row per MPC tick. `state` is the simulator's true state.
struct TelemetryRow {
  double time = 0.0;
  Vector13 state = Vector13::Zero();
  Vector13 reference = Vector13::Zero();
  Vector4 compensation = Vector4::Zero();
  Vector12 grfs = Vector12::Zero();
  QpStatus status = QpStatus::Solved;
  int iterations = 0;
};

using Telemetry = std::vector<TelemetryRow>;

/// time, x_*(13), ref_*(13), comp_roll..comp_height, f1..f12, status, iterations
std::string telemetry_header();
void write_telemetry_csv(std::ostream& out, const Telemetry& telemetry);

struct RunMetrics {
  double mean_height = 0.0;
  double height_p2p = 0.0;          // max - min over the window
  Vector4 mae = Vector4::Zero();    // roll, pitch, yaw, height
  Vector4 mse = Vector4::Zero();
  bool fell_over = false;
  int n_samples = 0;
};

/// Tracking channels desired - measured (roll, pitch, yaw wrapped to
/// [-pi, pi], height) of one row.
Vector4 tracking_error(const TelemetryRow& row);

/// Metrics over rows with time >= warmup. Throws EmptyWindow when none.
RunMetrics compute_metrics(const Telemetry& telemetry, double warmup);

/// 100 (baseline - compensated) / baseline; 0 when both are 0.
double reduction_percent(double baseline, double compensated);

std::string metrics_json(const RunMetrics& m, int indent = 2);

}  // namespace ecmpc
