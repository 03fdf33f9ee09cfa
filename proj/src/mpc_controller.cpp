#include "ecmpc/mpc_controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecmpc/errors.hpp"

namespace ecmpc {

void MpcConfig::validate() const {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if ((state_weights.array() < 0.0).any() || !(input_weight >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "weights must be non-negative");
  if (!(mu > 0.0) || !(fz_min >= 0.0) || !(fz_max > fz_min))
    throw Error(ErrorCode::InvalidArgument, "bad friction or force bounds");
  ModelParams{mass, inertia, {}}.validate();
}

ReferenceTrajectory build_reference(const MotionCommand& command, const Vector13& x0, const MpcConfig& cfg) {
  if (!command.velocity.allFinite() || !std::isfinite(command.yaw_rate) || !std::isfinite(command.height) ||
      !std::isfinite(command.yaw))
    throw Error(ErrorCode::InvalidArgument, "command is not finite");
  ReferenceTrajectory ref;
  ref.states.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
  for (int k = 0; k <= cfg.horizon; ++k) {
    const double t = k * cfg.dt;
    const double yaw = command.yaw + command.yaw_rate * t;
    Vector3 v_body = command.velocity;
    v_body.z() = 0.0;
    const Vector3 v_world = rot_z(yaw) * v_body;
    RobotState s;
    s.theta = Vector3(command.roll, command.pitch, yaw);
    s.p = Vector3(x0(3) + v_world.x() * t, x0(4) + v_world.y() * t, command.height);
    s.omega = Vector3(0.0, 0.0, command.yaw_rate);
    s.v = v_world;
    ref.states.push_back(s.to_vector());
  }
  return ref;
}

namespace {

const DiscreteDynamics& model_at(const std::vector<DiscreteDynamics>& dyn, std::size_t k) {
  return dyn.size() == 1 ? dyn.front() : dyn[k];
}

bool all_zero(const std::vector<Vector13>& c) {
  return std::all_of(c.begin(), c.end(), [](const Vector13& v) { return (v.array() == 0.0).all(); });
}

}  // namespace

std::vector<Vector13> rollout(const std::vector<DiscreteDynamics>& dyn, const std::vector<Vector13>& compensation,
                              const Vector13& x0, const std::vector<Vector12>& inputs, CompensationMode mode) {
  const std::size_t n = inputs.size();
  if (dyn.size() != 1 && dyn.size() != n) throw Error(ErrorCode::DimensionMismatch, "one model per step expected");
  if (!compensation.empty() && compensation.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "compensation must have one entry per step");
  std::vector<Vector13> out;
  out.reserve(n);
  Vector13 x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    x = step(model_at(dyn, k), x, inputs[k]);
    if (compensation.empty()) {
      out.push_back(x);
    } else if (mode == CompensationMode::Propagated) {
      x += compensation[k];
      out.push_back(x);
    } else {
      out.push_back(x + compensation[k]);
    }
  }
  return out;
}

QpProblem condense(const std::vector<DiscreteDynamics>& dyn, const std::vector<Vector13>& compensation,
                   const Vector13& x0, const ReferenceTrajectory& ref, const MpcConfig& cfg) {
  const int n = cfg.horizon;
  if (dyn.empty() || (dyn.size() != 1 && dyn.size() != static_cast<std::size_t>(n)))
    throw Error(ErrorCode::DimensionMismatch, "one model per step expected");
  if (!compensation.empty() && compensation.size() != static_cast<std::size_t>(n))
    throw Error(ErrorCode::DimensionMismatch, "compensation must have N entries");
  if (ref.states.size() != static_cast<std::size_t>(n) + 1)
    throw Error(ErrorCode::DimensionMismatch, "reference must have N+1 states");

  const Eigen::Index rows = 13 * n;
  const Eigen::Index cols = 12 * n;
  Eigen::MatrixXd s_u = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd free = Eigen::VectorXd::Zero(rows);  // S_x x0 plus compensation
  const bool compensate = !compensation.empty() && !all_zero(compensation);
  const bool propagate = cfg.compensation_mode == CompensationMode::Propagated;

  Vector13 x = x0;
  for (int k = 0; k < n; ++k) {
    const DiscreteDynamics& d = model_at(dyn, static_cast<std::size_t>(k));
    if (k > 0) s_u.block(13 * k, 0, 13, 12 * k) = d.a_mat * s_u.block(13 * (k - 1), 0, 13, 12 * k);
    s_u.block(13 * k, 12 * k, 13, 12) = d.b_mat;
    x = d.a_mat * x;
    if (compensate && propagate) x += compensation[static_cast<std::size_t>(k)];
    free.segment<13>(13 * k) = x;
    if (compensate && !propagate) free.segment<13>(13 * k) += compensation[static_cast<std::size_t>(k)];
  }

  Eigen::VectorXd q(rows);
  Eigen::VectorXd target(rows);
  for (int k = 0; k < n; ++k) {
    q.segment<13>(13 * k) = cfg.state_weights;
    target.segment<13>(13 * k) = ref.states[static_cast<std::size_t>(k) + 1];
  }
  const Eigen::MatrixXd qs = q.asDiagonal() * s_u;

  QpProblem qp;
  qp.h = 2.0 * (s_u.transpose() * qs);
  qp.h.diagonal().array() += 2.0 * cfg.input_weight;
  qp.f = 2.0 * (qs.transpose() * (free - target));
  qp.a_ineq.resize(0, cols);
  qp.lower.resize(0);
  qp.upper.resize(0);
  qp.a_eq.resize(0, cols);
  qp.b_eq.resize(0);
  return qp;
}

void add_contact_constraints(QpProblem& qp, const std::vector<ContactMask>& contacts, const MpcConfig& cfg) {
  const int n = static_cast<int>(contacts.size());
  if (qp.num_vars() != 12 * n) throw Error(ErrorCode::DimensionMismatch, "contacts must match the horizon");
  std::vector<ConstraintBlock> blocks;
  Eigen::Index m_ineq = 0;
  Eigen::Index m_eq = 0;
  for (const auto& mask : contacts) {
    blocks.push_back(build_friction_constraints(cfg.mu, mask, cfg.fz_min, cfg.fz_max));
    m_ineq += blocks.back().a_ineq.rows();
    m_eq += blocks.back().a_eq.rows();
  }
  qp.a_ineq = Eigen::MatrixXd::Zero(m_ineq, 12 * n);
  qp.lower.resize(m_ineq);
  qp.upper.resize(m_ineq);
  qp.a_eq = Eigen::MatrixXd::Zero(m_eq, 12 * n);
  qp.b_eq.resize(m_eq);
  Eigen::Index ri = 0;
  Eigen::Index re = 0;
  for (int k = 0; k < n; ++k) {
    const ConstraintBlock& b = blocks[static_cast<std::size_t>(k)];
    qp.a_ineq.block(ri, 12 * k, b.a_ineq.rows(), 12) = b.a_ineq;
    qp.lower.segment(ri, b.lower.size()) = b.lower;
    qp.upper.segment(ri, b.upper.size()) = b.upper;
    ri += b.a_ineq.rows();
    qp.a_eq.block(re, 12 * k, b.a_eq.rows(), 12) = b.a_eq;
    qp.b_eq.segment(re, b.b_eq.size()) = b.b_eq;
    re += b.a_eq.rows();
  }
}

MpcController::MpcController(MpcConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void MpcController::reset() {
  plan_.clear();
  failures_ = 0;
}

std::vector<Vector12> MpcController::planned_inputs() const {
  if (plan_.empty()) return {};
  std::vector<Vector12> shifted(plan_.begin() + 1, plan_.end());
  shifted.push_back(plan_.back());
  return shifted;
}

std::vector<DiscreteDynamics> MpcController::models(const MpcInput& in, const ReferenceTrajectory& ref) const {
  const double yaw = in.x(2);
  std::vector<DiscreteDynamics> dyn;
  dyn.reserve(static_cast<std::size_t>(cfg_.horizon));
  ModelParams params{cfg_.mass, cfg_.inertia, {}};
  for (int k = 0; k < cfg_.horizon; ++k) {
    const Vector3 com = k == 0 ? Vector3(in.x.segment<3>(3)) : Vector3(ref.states[static_cast<std::size_t>(k)].segment<3>(3));
    for (int leg = 0; leg < 4; ++leg)
      params.feet[static_cast<std::size_t>(leg)] = in.feet[static_cast<std::size_t>(k)][static_cast<std::size_t>(leg)] - com;
    dyn.push_back(discretize(continuous_matrices(yaw, params), cfg_.dt));
  }
  return dyn;
}

MpcOutput MpcController::tick(const MpcInput& in, const OnlineErrorModel* error_model) {
  const int n = cfg_.horizon;
  if (in.contacts.size() != static_cast<std::size_t>(n) || in.feet.size() != static_cast<std::size_t>(n))
    throw Error(ErrorCode::DimensionMismatch, "contacts and feet must cover the horizon");
  if (!in.x.allFinite()) throw Error(ErrorCode::InvalidArgument, "measured state is not finite");

  MpcOutput out;
  out.reference = build_reference(in.command, in.x, cfg_);
  const std::vector<DiscreteDynamics> dyn = models(in, out.reference);

  std::vector<Vector13> compensation;
  if (cfg_.compensation_enabled && error_model != nullptr && error_model->active()) {
    std::vector<Vector12> planned = planned_inputs();
    if (planned.empty()) {
      for (const auto& mask : in.contacts) {
        Vector12 u = Vector12::Zero();
        const int stance = static_cast<int>(std::count(mask.begin(), mask.end(), true));
        for (int leg = 0; leg < 4; ++leg)
          if (mask[static_cast<std::size_t>(leg)]) u(3 * leg + 2) = cfg_.mass * kGravity / stance;
        planned.push_back(u);
      }
    }
    if (const auto forecast = error_model->forecast(planned)) {
      const std::vector<Vector13> s_e = compensation_term(*forecast);
      compensation.reserve(s_e.size());
      for (const auto& c : s_e) compensation.push_back(-c);
      out.compensation = forecast->front();
      out.compensated = true;
    }
  }

  QpProblem qp = condense(dyn, compensation, in.x, out.reference, cfg_);
  add_contact_constraints(qp, in.contacts, cfg_);
  if (dump_ != nullptr) qp.dump(*dump_);

  std::optional<Eigen::VectorXd> warm;
  if (!plan_.empty()) {
    const std::vector<Vector12> shifted = planned_inputs();
    Eigen::VectorXd y(12 * n);
    for (int k = 0; k < n; ++k) {
      Vector12 u = shifted[static_cast<std::size_t>(k)];
      for (int leg = 0; leg < 4; ++leg)
        if (!in.contacts[static_cast<std::size_t>(k)][static_cast<std::size_t>(leg)]) u.segment<3>(3 * leg).setZero();
      y.segment<12>(12 * k) = u;
    }
    warm = std::move(y);
  }

  const QpSolution sol = solver_.solve(qp, warm);
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.kkt_residual = sol.kkt_residual;

  if (sol.status == QpStatus::Infeasible) {
    ++failures_;
    out.fallback = true;
    out.grfs = plan_.empty() ? std::vector<Vector12>(static_cast<std::size_t>(n), Vector12::Zero())
                             : std::vector<Vector12>(static_cast<std::size_t>(n), plan_.front());
  } else {
    failures_ = 0;
    out.grfs.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out.grfs[static_cast<std::size_t>(k)] = sol.y.segment<12>(12 * k);
    plan_ = out.grfs;
  }

  out.predicted = rollout(dyn, compensation, in.x, out.grfs, cfg_.compensation_mode);
  out.nominal_next = step(dyn.front(), in.x, out.grfs.front());
  return out;
}

}  // namespace ecmpc
