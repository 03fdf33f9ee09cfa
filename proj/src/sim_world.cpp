#include "ecmpc/sim_world.hpp"

#include <cmath>

#include "ecmpc/errors.hpp"

namespace ecmpc {

SimWorld::SimWorld(SimParams params, const RobotState& initial, const std::array<Vector3, 4>& feet)
    : params_(std::move(params)),
      q_(rotation_from_euler(initial.theta)),
      p_(initial.p),
      v_(initial.v),
      omega_(initial.omega),
      feet_(feet) {
  ModelParams{params_.mass, params_.inertia, {}}.validate();
  if (!(params_.physics_dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "physics dt must be positive");
  q_.normalize();
}

void SimWorld::set_external_wrench(const Vector3& force, const Vector3& torque) {
  ext_force_ = force;
  ext_torque_ = torque;
}

double SimWorld::mass() const {
  double m = params_.mass;
  const double t = time();
  for (const auto& e : params_.payload)
    if (e.time <= t + 1e-12) m += e.mass;
  return m;
}

Matrix3 SimWorld::world_inertia() const {
  const Matrix3 r = q_.toRotationMatrix();
  return r * params_.inertia * r.transpose();
}

RobotState SimWorld::state() const {
  RobotState s;
  s.theta = euler_from_rotation(q_.toRotationMatrix());
  s.p = p_;
  s.omega = omega_;
  s.v = v_;
  return s;
}

void SimWorld::physics_step(const Vector12& grfs, const ContactMask& stance) {
  const double dt = params_.physics_dt;
  const double m = mass();

  const double blend = params_.force_lag > 0.0 ? dt / (params_.force_lag + dt) : 1.0;
  Vector3 force = ext_force_;
  Vector3 torque = ext_torque_;
  for (int leg = 0; leg < 4; ++leg) {
    auto f_leg = realized_.segment<3>(3 * leg);
    if (!stance[static_cast<std::size_t>(leg)]) {
      f_leg.setZero();
      continue;
    }
    f_leg += blend * (grfs.segment<3>(3 * leg) - f_leg);
    const Vector3 f = f_leg;
    force += f;
    torque += (feet_[static_cast<std::size_t>(leg)] - p_).cross(f);
  }
  if (params_.gravity) force.z() -= m * kGravity;

  const Matrix3 inertia = world_inertia();
  const Vector3 omega_dot = inertia.ldlt().solve(torque - omega_.cross(inertia * omega_));

  const Vector3 v_new = v_ + force / m * dt;
  p_ += 0.5 * (v_ + v_new) * dt;
  v_ = v_new;

  omega_ += omega_dot * dt;
  const double angle = omega_.norm() * dt;
  if (angle > 0.0) {
    const Eigen::Quaterniond dq(Eigen::AngleAxisd(angle, omega_.normalized()));
    q_ = dq * q_;
  }
  q_.normalize();
  ++steps_;
}

bool SimWorld::fell_over() const {
  const Vector3 theta = euler_from_rotation(q_.toRotationMatrix());
  return p_.z() - params_.ground_height < params_.fall_height || std::abs(theta.x()) > params_.fall_angle ||
         std::abs(theta.y()) > params_.fall_angle;
}

double SimWorld::energy() const {
  const double m = mass();
  const double g = params_.gravity ? kGravity : 0.0;
  return 0.5 * m * v_.squaredNorm() + 0.5 * omega_.dot(world_inertia() * omega_) +
         m * g * (p_.z() - params_.ground_height);
}

}  // namespace ecmpc
