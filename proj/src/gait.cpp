#include "ecmpc/gait.hpp"

#include <cmath>
#include <limits>

#include "ecmpc/errors.hpp"

namespace ecmpc {

GaitSchedule GaitSchedule::trot(double period, double duty) {
  GaitSchedule g;
  g.period = period;
  g.duty = duty;
  g.offsets = {0.0, 0.5, 0.5, 0.0};
  return g;
}

GaitSchedule GaitSchedule::stand() {
  GaitSchedule g;
  g.duty = 1.0;
  g.offsets = {0.0, 0.0, 0.0, 0.0};
  return g;
}

GaitClock::GaitClock(const GaitSchedule& gait, double step_dt) : dt_(step_dt) {
  if (!(step_dt > 0.0) || !(gait.period > 0.0)) throw Error(ErrorCode::InvalidArgument, "gait period and step must be positive");
  if (!(gait.duty > 0.0) || gait.duty > 1.0) throw Error(ErrorCode::InvalidArgument, "duty must be in (0, 1]");
  period_ = std::llround(gait.period / step_dt);
  if (period_ < 2) throw Error(ErrorCode::InvalidArgument, "gait period shorter than two steps");
  stance_ = std::llround(gait.duty * static_cast<double>(period_));
  for (int leg = 0; leg < 4; ++leg) {
    const double off = gait.offsets[static_cast<std::size_t>(leg)] - std::floor(gait.offsets[static_cast<std::size_t>(leg)]);
    offset_[static_cast<std::size_t>(leg)] = std::llround(off * static_cast<double>(period_)) % period_;
  }
}

std::int64_t GaitClock::phase(int leg, std::int64_t step) const {
  const std::int64_t k = (step - offset_[static_cast<std::size_t>(leg)]) % period_;
  return k < 0 ? k + period_ : k;
}

bool GaitClock::stance(int leg, std::int64_t step) const { return phase(leg, step) < stance_; }

ContactMask GaitClock::mask(std::int64_t step) const {
  return {stance(0, step), stance(1, step), stance(2, step), stance(3, step)};
}

std::int64_t GaitClock::next_touchdown(int leg, std::int64_t step) const {
  const std::int64_t ph = phase(leg, step);
  return ph == 0 ? step : step + (period_ - ph);
}

std::int64_t GaitClock::next_liftoff(int leg, std::int64_t step) const {
  if (stance_ >= period_) return std::numeric_limits<std::int64_t>::max();
  const std::int64_t ph = phase(leg, step);
  return ph < stance_ ? step + (stance_ - ph) : step + (period_ - ph) + stance_;
}

Eigen::Vector3d plan_foothold(int leg, const Eigen::Vector3d& position, double yaw, const Eigen::Vector3d& velocity,
                              const Eigen::Vector3d& velocity_cmd, double lead_time, double stance_time,
                              const BodyGeometry& geometry, double ground_height) {
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  Eigen::Vector3d v = velocity;
  v.z() = 0.0;
  Eigen::Vector3d v_cmd = velocity_cmd;
  v_cmd.z() = 0.0;
  Eigen::Vector3d foot = position + rz * geometry.hips[static_cast<std::size_t>(leg)] + v_cmd * lead_time +
                         v * (0.5 * stance_time) + geometry.foothold_gain * (v - v_cmd);
  foot.z() = ground_height;
  return foot;
}

}  // namespace ecmpc
