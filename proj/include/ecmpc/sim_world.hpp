#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <vector>

#include "ecmpc/gait.hpp"
#include "ecmpc/srb_dynamics.hpp"

namespace ecmpc {

struct PayloadEvent {
  double time = 0.0;  // s
  double mass = 0.0;  // kg, added at the CoM
};

struct SimParams {
  double mass = 23.7;
  Matrix3 inertia = Eigen::Vector3d(0.35, 1.28, 1.47).asDiagonal();
  double physics_dt = 0.001;
  double ground_height = 0.0;
  std::vector<PayloadEvent> payload;
  bool gravity = true;
  /// Time constant (s) of the first-order lag between commanded and realized
  /// foot forces; 0 applies commands directly. A foot starts from zero force
  /// at touchdown.
  double force_lag = 0.0;
  double fall_height = 0.15;
  double fall_angle = 0.6;
};

/// Nonlinear single-rigid-body truth model with point feet. Orientation is a
/// unit quaternion (body to world); angular velocity is world-frame.
class SimWorld {
 public:
  SimWorld(SimParams params, const RobotState& initial, const std::array<Vector3, 4>& feet);

  /// One semi-implicit step: v and omega are advanced with the forces of the
  /// stance feet (swing forces are ignored), then position with the average
  /// velocity and orientation with the new angular velocity.
  void physics_step(const Vector12& grfs, const ContactMask& stance);

  void set_external_wrench(const Vector3& force, const Vector3& torque);

  double time() const { return static_cast<double>(steps_) * params_.physics_dt; }
  std::int64_t steps() const { return steps_; }
  const SimParams& params() const { return params_; }

  /// Mass including every payload event with time <= now.
  double mass() const;
  RobotState state() const;
  const Eigen::Quaterniond& orientation() const { return q_; }
  const Vector3& position() const { return p_; }
  const Vector3& velocity() const { return v_; }
  const Vector3& angular_velocity() const { return omega_; }
  Matrix3 world_inertia() const;

  const std::array<Vector3, 4>& feet() const { return feet_; }
  void place_foot(int leg, const Vector3& position) { feet_[static_cast<std::size_t>(leg)] = position; }

  /// Forces realized at the feet in the last step.
  const Vector12& realized_forces() const { return realized_; }

  /// Height below fall_height or |roll|, |pitch| above fall_angle.
  bool fell_over() const;
  /// Kinetic plus potential energy relative to the ground.
  double energy() const;

 private:
  SimParams params_;
  Eigen::Quaterniond q_;
  Vector3 p_;
  Vector3 v_;
  Vector3 omega_;
  std::array<Vector3, 4> feet_;
  Vector12 realized_ = Vector12::Zero();
  Vector3 ext_force_ = Vector3::Zero();
  Vector3 ext_torque_ = Vector3::Zero();
  std::int64_t steps_ = 0;
};

}  // namespace ecmpc
