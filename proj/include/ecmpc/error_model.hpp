#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ecmpc/armav.hpp"

namespace ecmpc {

using Vector4 = Eigen::Matrix<double, 4, 1>;
using Vector12 = Eigen::Matrix<double, 12, 1>;
using Vector13 = Eigen::Matrix<double, 13, 1>;
using Matrix4x12 = Eigen::Matrix<double, 4, 12>;

/// Error channels, in order: roll, pitch, yaw, body height.
inline constexpr int kErrorChannels = 4;

/// One control tick of error data: e is desired minus measured
/// (rad, rad, rad, m) and u the ground-reaction forces applied over the
/// interval ending at this tick (N).
struct ErrorSample {
  Vector4 e = Vector4::Zero();
  Vector12 u = Vector12::Zero();
  std::int64_t tick = 0;
};

/// Bounded ring of error samples with strictly increasing ticks.
class ErrorBuffer {
 public:
  explicit ErrorBuffer(std::size_t capacity = 2000);

  /// Throws NonMonotonicTick unless sample.tick is greater than the last tick.
  void push(const ErrorSample& sample);

  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return samples_.empty(); }
  const ErrorSample& operator[](std::size_t i) const { return samples_[i]; }
  const ErrorSample& back() const { return samples_.back(); }
  void clear() { samples_.clear(); }

  /// Errors and inputs of the newest `count` samples (all when count == 0),
  /// one row per tick.
  Eigen::MatrixXd errors(std::size_t count = 0) const;
  Eigen::MatrixXd inputs(std::size_t count = 0) const;

  /// CSV with header tick,e1..e4,u1..u12.
  void write_csv(std::ostream& out) const;
  static ErrorBuffer read_csv(std::istream& in,
                              std::size_t capacity = std::numeric_limits<std::size_t>::max());

 private:
  std::size_t capacity_;
  std::deque<ErrorSample> samples_;
};

/// Per-leg static support force: supported_weight split evenly over the legs
/// carrying vertical force in u (fz > 0); zero for the other legs.
Vector12 input_baseline(const Vector12& u, double supported_weight);

/// ARMAV error model with the exogenous GRF term
///   e_t = core(e) + C (u_t - baseline(u_t)).
class InputAwareErrorModel {
 public:
  InputAwareErrorModel() = default;
  InputAwareErrorModel(ArmavModel core, Matrix4x12 c_matrix, double supported_weight);

  const ArmavModel& core() const { return core_; }
  ArmavModel& core() { return core_; }
  const Matrix4x12& c_matrix() const { return c_matrix_; }
  double supported_weight() const { return supported_weight_; }
  bool warm() const { return core_.dim() == kErrorChannels && core_.warm(); }

  Vector12 baseline(const Vector12& u) const { return input_baseline(u, supported_weight_); }
  /// e - C (u - baseline): the part of the error left to the ARMAV core.
  Vector4 input_free(const ErrorSample& sample) const;

  /// Feeds a new sample through the core; returns the core residual.
  Vector4 observe(const ErrorSample& sample);

  /// e_hat_{t+j} = core forecast_j + C (planned_u_j - baseline), j = 1..k.
  std::vector<Vector4> predict_errors(const std::vector<Vector12>& planned_u) const;

 private:
  ArmavModel core_;
  Matrix4x12 c_matrix_ = Matrix4x12::Zero();
  double supported_weight_ = 0.0;
};

struct ErrorModelFitOptions {
  double supported_weight = 0.0;
  bool estimate_input_gain = true;  // false forces C = 0
};

struct ErrorModelFit {
  InputAwareErrorModel model;
  FitDiagnostics diagnostics;
  Eigen::MatrixXd residuals;  // rows from burn_in on
  int n = 0;
  int m = 0;
};

/// Joint least squares for C with AR(max(n,m)+m) on the deviations
/// u - baseline, then ARMAV(n, m) on the input-free series. `count` limits the
/// fit to the newest samples (0 = whole buffer).
ErrorModelFit fit_error_model(const ErrorBuffer& buffer, int n, int m,
                              const ErrorModelFitOptions& options, std::size_t count = 0);

/// As above with orders chosen by select_order on the input-free series.
ErrorModelFit fit_error_model_auto(const ErrorBuffer& buffer, double alpha, int max_k,
                                   const ErrorModelFitOptions& options, std::size_t count = 0);

/// Embeds the 4-channel error into the 13-element state: roll, pitch, yaw map
/// to rows 0..2 and height to row 5.
struct SelectMatrix {
  Eigen::Matrix<double, 13, 4> s;
  static SelectMatrix standard();
};

/// S e_hat for every forecast step.
std::vector<Vector13> compensation_term(const std::vector<Vector4>& predicted_errors,
                                        const SelectMatrix& select = SelectMatrix::standard());

struct AdequacyReport {
  bool pass = false;
  double fraction_inside = 0.0;  // share of (channel, lag) pairs within 2/sqrt(N)
  int n_samples = 0;
  std::string reason;
  std::vector<Eigen::VectorXd> autocorr;
};

/// Residual whiteness check over lags 1..max_lag. Fails when more than 5% of
/// the pooled (channel, lag) autocorrelations leave +-2/sqrt(N), when fewer
/// than 100 residuals are given, or on zero variance.
AdequacyReport adequacy_check(const Eigen::MatrixXd& recent_residuals, int max_lag = 20);

/// Model-aware variant: additionally fails a core that is not stationary or
/// not invertible.
AdequacyReport adequacy_check(const InputAwareErrorModel& model,
                              const Eigen::MatrixXd& recent_residuals, int max_lag = 20);

struct OnlineErrorModelConfig {
  std::size_t capacity = 2000;
  int refit_every = 250;      // ticks between refits; 0 keeps an installed model fixed
  std::size_t fit_window = 0; // newest samples used per fit; 0 = whole buffer
  std::size_t min_samples = 120;
  bool auto_order = false;
  int ar_order = 2;
  int ma_order = 1;
  double alpha = 0.95;
  int max_k = 2;
  bool estimate_input_gain = true;
  bool adequacy_gating = true;
  double supported_weight = 0.0;
};

/// Error-model bookkeeping for the control loop: collects samples, keeps the
/// active model's buffers current, refits on a fixed cadence and withholds
/// forecasts while no adequate model exists.
class OnlineErrorModel {
 public:
  explicit OnlineErrorModel(OnlineErrorModelConfig config = {});

  void record(const ErrorSample& sample);

  /// Forecast for the given planned inputs, or nullopt while cold or gated.
  std::optional<std::vector<Vector4>> forecast(const std::vector<Vector12>& planned_u) const;

  /// Fits on the current buffer now. Returns true when the new model passed
  /// the adequacy check (or gating is off).
  bool refit();

  /// Fixed-model mode: installs a pre-fitted model. Its history is cleared
  /// and refilled from the samples recorded afterwards.
  void install(InputAwareErrorModel model);

  bool active() const { return model_.has_value() && usable_; }
  const std::optional<InputAwareErrorModel>& model() const { return model_; }
  const ErrorBuffer& buffer() const { return buffer_; }
  const AdequacyReport& last_report() const { return report_; }
  const OnlineErrorModelConfig& config() const { return config_; }
  int refit_count() const { return refits_; }
  int failed_refits() const { return failed_; }

 private:
  OnlineErrorModelConfig config_;
  ErrorBuffer buffer_;
  std::optional<InputAwareErrorModel> model_;
  bool usable_ = false;
  AdequacyReport report_;
  int since_refit_ = 0;
  int refits_ = 0;
  int failed_ = 0;
};

}  // namespace ecmpc
