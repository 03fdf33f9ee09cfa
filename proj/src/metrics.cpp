#include "ecmpc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ecmpc/errors.hpp"

namespace ecmpc {

namespace {

const char* const kStateNames[13] = {"roll", "pitch", "yaw", "px", "py", "pz", "wx",
                                     "wy",   "wz",    "vx",  "vy", "vz", "g"};

double wrap_angle(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

}  // namespace

std::string telemetry_header() {
  std::ostringstream h;
  h << "time";
  for (const char* n : kStateNames) h << ",x_" << n;
  for (const char* n : kStateNames) h << ",ref_" << n;
  h << ",comp_roll,comp_pitch,comp_yaw,comp_height";
  for (int i = 1; i <= 12; ++i) h << ",f" << i;
  h << ",status,iterations";
  return h.str();
}

void write_telemetry_csv(std::ostream& out, const Telemetry& telemetry) {
  const auto precision = out.precision(17);
  out << telemetry_header() << '\n';
  for (const auto& r : telemetry) {
    out << r.time;
    for (int i = 0; i < 13; ++i) out << ',' << r.state(i);
    for (int i = 0; i < 13; ++i) out << ',' << r.reference(i);
    for (int i = 0; i < 4; ++i) out << ',' << r.compensation(i);
    for (int i = 0; i < 12; ++i) out << ',' << r.grfs(i);
    out << ',' << to_string(r.status) << ',' << r.iterations << '\n';
  }
  out.precision(precision);
}

Vector4 tracking_error(const TelemetryRow& row) {
  Vector4 e;
  e(0) = row.reference(0) - row.state(0);
  e(1) = row.reference(1) - row.state(1);
  e(2) = wrap_angle(row.reference(2) - row.state(2));
  e(3) = row.reference(5) - row.state(5);
  return e;
}

RunMetrics compute_metrics(const Telemetry& telemetry, double warmup) {
  RunMetrics m;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double height_sum = 0.0;
  for (const auto& r : telemetry) {
    if (r.time < warmup) continue;
    const Vector4 e = tracking_error(r);
    m.mae += e.cwiseAbs();
    m.mse += e.cwiseAbs2();
    const double z = r.state(5);
    height_sum += z;
    lo = std::min(lo, z);
    hi = std::max(hi, z);
    ++m.n_samples;
  }
  if (m.n_samples == 0) throw Error(ErrorCode::EmptyWindow, "no telemetry after the warm-up window");
  m.mae /= m.n_samples;
  m.mse /= m.n_samples;
  m.mean_height = height_sum / m.n_samples;
  m.height_p2p = hi - lo;
  return m;
}

double reduction_percent(double baseline, double compensated) {
  if (baseline == 0.0) return compensated == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return 100.0 * (baseline - compensated) / baseline;
}

std::string metrics_json(const RunMetrics& m, int indent) {
  nlohmann::ordered_json j;
  j["mean_height"] = m.mean_height;
  j["height_p2p"] = m.height_p2p;
  j["mae"] = {m.mae(0), m.mae(1), m.mae(2), m.mae(3)};
  j["mse"] = {m.mse(0), m.mse(1), m.mse(2), m.mse(3)};
  j["fell_over"] = m.fell_over;
  j["n_samples"] = m.n_samples;
  return j.dump(indent);
}

}  // namespace ecmpc
