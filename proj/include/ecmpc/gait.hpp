#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>

namespace ecmpc {

/// Leg order used everywhere: front-right, front-left, hind-right, hind-left.
enum Leg : int { kFR = 0, kFL = 1, kHR = 2, kHL = 3 };

using ContactMask = std::array<bool, 4>;

struct GaitSchedule {
  double period = 0.48;  // s
  double duty = 0.5;
  std::array<double, 4> offsets{0.0, 0.5, 0.5, 0.0};  // phase offsets per leg

  /// Diagonal pairs FR+HL and FL+HR in anti-phase.
  static GaitSchedule trot(double period = 0.48, double duty = 0.5);
  /// All legs in stance.
  static GaitSchedule stand();
};

/// Gait evaluated on an integer step grid so stance windows have exactly
/// duty * period length.
class GaitClock {
 public:
  GaitClock(const GaitSchedule& gait, double step_dt);

  bool stance(int leg, std::int64_t step) const;
  ContactMask mask(std::int64_t step) const;
  /// First step >= `step` at which the leg starts a stance window.
  std::int64_t next_touchdown(int leg, std::int64_t step) const;
  /// Start of the gait cycle containing `step` for this leg; equals the
  /// touchdown step of the current stance window while in stance.
  std::int64_t cycle_start(int leg, std::int64_t step) const { return step - phase(leg, step); }
  /// First step > `step` at which the leg lifts off.
  std::int64_t next_liftoff(int leg, std::int64_t step) const;

  std::int64_t period_steps() const { return period_; }
  std::int64_t stance_steps() const { return stance_; }
  double step_dt() const { return dt_; }

 private:
  std::int64_t phase(int leg, std::int64_t step) const;

  std::int64_t period_;
  std::int64_t stance_;
  std::array<std::int64_t, 4> offset_{};
  double dt_;
};

struct BodyGeometry {
  /// Hip positions in the body frame, leg order FR, FL, HR, HL.
  std::array<Eigen::Vector3d, 4> hips{Eigen::Vector3d(0.39, -0.185, 0.0), Eigen::Vector3d(0.39, 0.185, 0.0),
                                      Eigen::Vector3d(-0.39, -0.185, 0.0), Eigen::Vector3d(-0.39, 0.185, 0.0)};
  double foothold_gain = 0.03;  // s, velocity-error correction
};

/// Touchdown point for a stance window starting `lead_time` seconds from now:
/// the hip projected to the ground at touchdown, plus v * T_stance / 2 and a
/// correction k (v - v_cmd). Velocities are world-frame.
Eigen::Vector3d plan_foothold(int leg, const Eigen::Vector3d& position, double yaw, const Eigen::Vector3d& velocity,
                              const Eigen::Vector3d& velocity_cmd, double lead_time, double stance_time,
                              const BodyGeometry& geometry, double ground_height = 0.0);

}  // namespace ecmpc
