#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ecmpc/errors.hpp"
#include "ecmpc/gait.hpp"
#include "ecmpc/metrics.hpp"

using namespace ecmpc;

TEST_CASE("trot alternates diagonal pairs") {
  const GaitClock clock(GaitSchedule::trot(), 0.03);
  CHECK(clock.period_steps() == 16);
  CHECK(clock.stance_steps() == 8);
  for (std::int64_t step = 0; step < 64; ++step) {
    const ContactMask m = clock.mask(step);
    CHECK(m[kFR] == m[kHL]);
    CHECK(m[kFL] == m[kHR]);
    CHECK(m[kFR] != m[kFL]);
  }
  CHECK(clock.stance(kFR, 0));
  CHECK(clock.stance(kFR, 7));
  CHECK_FALSE(clock.stance(kFR, 8));
  CHECK(clock.stance(kFL, 8));
}

TEST_CASE("touchdown and liftoff bookkeeping") {
  const GaitClock clock(GaitSchedule::trot(), 0.03);
  CHECK(clock.next_touchdown(kFR, 0) == 0);
  CHECK(clock.next_touchdown(kFR, 1) == 16);
  CHECK(clock.next_touchdown(kFL, 3) == 8);
  CHECK(clock.next_liftoff(kFR, 0) == 8);
  CHECK(clock.next_liftoff(kFR, 9) == 24);
  CHECK(clock.cycle_start(kFR, 5) == 0);
  CHECK(clock.cycle_start(kFL, 10) == 8);
  // Negative steps wrap consistently.
  CHECK(clock.stance(kFR, -16) == clock.stance(kFR, 0));
}

TEST_CASE("standing gait never lifts a foot") {
  const GaitClock clock(GaitSchedule::stand(), 0.03);
  for (std::int64_t step = 0; step < 40; ++step) CHECK(clock.mask(step) == ContactMask{true, true, true, true});
  CHECK(clock.next_liftoff(kHR, 3) == std::numeric_limits<std::int64_t>::max());
}

TEST_CASE("gait validation") {
  GaitSchedule g = GaitSchedule::trot();
  g.duty = 0.0;
  CHECK_THROWS_AS(GaitClock(g, 0.03), Error);
  CHECK_THROWS_AS(GaitClock(GaitSchedule::trot(0.03), 0.03), Error);
  CHECK_THROWS_AS(GaitClock(GaitSchedule::trot(), 0.0), Error);
}

TEST_CASE("foothold at rest is below the hip") {
  const BodyGeometry geo;
  const Eigen::Vector3d p(1.0, 2.0, 0.38);
  const Eigen::Vector3d f = plan_foothold(kFL, p, M_PI / 2, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 0.1,
                                          0.24, geo);
  CHECK(f.x() == doctest::Approx(1.0 - 0.185));
  CHECK(f.y() == doctest::Approx(2.0 + 0.39));
  CHECK(f.z() == 0.0);

  // Moving at the command: lead plus half a stance ahead.
  const Eigen::Vector3d v(0.5, 0.0, 0.0);
  const Eigen::Vector3d g = plan_foothold(kFR, p, 0.0, v, v, 0.1, 0.24, geo, 0.02);
  CHECK(g.x() == doctest::Approx(1.0 + 0.39 + 0.5 * 0.1 + 0.5 * 0.12));
  CHECK(g.z() == 0.02);
}

namespace {

TelemetryRow row(double t, double z, double yaw_ref = 0.0, double yaw = 0.0) {
  TelemetryRow r;
  r.time = t;
  r.state(5) = z;
  r.state(2) = yaw;
  r.reference(5) = 0.38;
  r.reference(2) = yaw_ref;
  return r;
}

}  // namespace

TEST_CASE("metrics over the post warm-up window") {
  Telemetry tel{row(0.0, 0.10), row(1.0, 0.37), row(1.5, 0.39), row(2.0, 0.36)};
  const RunMetrics m = compute_metrics(tel, 1.0);
  CHECK(m.n_samples == 3);
  CHECK(m.mean_height == doctest::Approx((0.37 + 0.39 + 0.36) / 3));
  CHECK(m.height_p2p == doctest::Approx(0.03));
  CHECK(m.mae(3) == doctest::Approx((0.01 + 0.01 + 0.02) / 3));
  CHECK(m.mse(3) == doctest::Approx((1e-4 + 1e-4 + 4e-4) / 3));
  CHECK(m.mae(0) == 0.0);
  CHECK_THROWS_AS(compute_metrics(tel, 5.0), Error);
}

TEST_CASE("yaw error wraps across pi") {
  const Vector4 e = tracking_error(row(0.0, 0.38, M_PI - 0.01, -M_PI + 0.01));
  CHECK(e(2) == doctest::Approx(-0.02));
  CHECK(e(3) == doctest::Approx(0.0));
}

TEST_CASE("reduction percent") {
  CHECK(reduction_percent(10.0, 7.5) == doctest::Approx(25.0));
  CHECK(reduction_percent(10.0, 12.0) == doctest::Approx(-20.0));
  CHECK(reduction_percent(0.0, 0.0) == 0.0);
  CHECK(std::isinf(reduction_percent(0.0, 1.0)));
}

TEST_CASE("telemetry csv has one column per header field") {
  Telemetry tel{row(0.0, 0.38), row(0.03, 0.381)};
  std::ostringstream out;
  write_telemetry_csv(out, tel);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  const auto commas = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  // time, 13 states, 13 references, 4 offsets, 12 forces, status, iterations
  CHECK(commas(header) == 44);
  CHECK(commas(line) == commas(header));
  CHECK(header.rfind("time,x_roll", 0) == 0);
  CHECK(metrics_json(compute_metrics(tel, 0.0)).find("\"height_p2p\"") != std::string::npos);
}
