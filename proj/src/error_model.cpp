#include "ecmpc/error_model.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "ecmpc/errors.hpp"

namespace ecmpc {

ErrorBuffer::ErrorBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorCode::InvalidArgument, "buffer capacity must be positive");
}

void ErrorBuffer::push(const ErrorSample& sample) {
  if (!samples_.empty() && sample.tick <= samples_.back().tick)
    throw Error(ErrorCode::NonMonotonicTick,
                "tick " + std::to_string(sample.tick) + " after " + std::to_string(samples_.back().tick));
  if (!sample.e.allFinite() || !sample.u.allFinite())
    throw Error(ErrorCode::InvalidArgument, "error sample is not finite");
  samples_.push_back(sample);
  while (samples_.size() > capacity_) samples_.pop_front();
}

Eigen::MatrixXd ErrorBuffer::errors(std::size_t count) const {
  const std::size_t n = (count == 0 || count > size()) ? size() : count;
  Eigen::MatrixXd out(n, kErrorChannels);
  const std::size_t first = size() - n;
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = samples_[first + i].e.transpose();
  return out;
}

Eigen::MatrixXd ErrorBuffer::inputs(std::size_t count) const {
  const std::size_t n = (count == 0 || count > size()) ? size() : count;
  Eigen::MatrixXd out(n, 12);
  const std::size_t first = size() - n;
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = samples_[first + i].u.transpose();
  return out;
}

void ErrorBuffer::write_csv(std::ostream& out) const {
  out << "tick";
  for (int i = 1; i <= 4; ++i) out << ",e" << i;
  for (int i = 1; i <= 12; ++i) out << ",u" << i;
  out << '\n';
  out << std::setprecision(17);
  for (const auto& s : samples_) {
    out << s.tick;
    for (int i = 0; i < 4; ++i) out << ',' << s.e(i);
    for (int i = 0; i < 12; ++i) out << ',' << s.u(i);
    out << '\n';
  }
}

ErrorBuffer ErrorBuffer::read_csv(std::istream& in, std::size_t capacity) {
  ErrorBuffer buffer(capacity);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing CSV header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (values.size() != 17)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 17 columns");
    ErrorSample s;
    s.tick = static_cast<std::int64_t>(std::llround(values[0]));
    for (int i = 0; i < 4; ++i) s.e(i) = values[1 + i];
    for (int i = 0; i < 12; ++i) s.u(i) = values[5 + i];
    buffer.push(s);
  }
  return buffer;
}

Vector12 input_baseline(const Vector12& u, double supported_weight) {
  Vector12 b = Vector12::Zero();
  int loaded = 0;
  for (int leg = 0; leg < 4; ++leg) loaded += u(3 * leg + 2) > 0.0 ? 1 : 0;
  if (loaded == 0) return b;
  const double share = supported_weight / loaded;
  for (int leg = 0; leg < 4; ++leg)
    if (u(3 * leg + 2) > 0.0) b(3 * leg + 2) = share;
  return b;
}

InputAwareErrorModel::InputAwareErrorModel(ArmavModel core, Matrix4x12 c_matrix, double supported_weight)
    : core_(std::move(core)), c_matrix_(c_matrix), supported_weight_(supported_weight) {
  if (core_.dim() != kErrorChannels) throw Error(ErrorCode::DimensionMismatch, "error model core must be 4-dimensional");
  if (!c_matrix_.allFinite()) throw Error(ErrorCode::InvalidArgument, "C matrix is not finite");
}

Vector4 InputAwareErrorModel::input_free(const ErrorSample& sample) const {
  return sample.e - c_matrix_ * (sample.u - baseline(sample.u));
}

Vector4 InputAwareErrorModel::observe(const ErrorSample& sample) {
  return core_.observe(input_free(sample));
}

std::vector<Vector4> InputAwareErrorModel::predict_errors(const std::vector<Vector12>& planned_u) const {
  if (planned_u.empty()) throw Error(ErrorCode::InvalidArgument, "forecast horizon must be >= 1");
  const auto core = core_.predict_k_steps(static_cast<int>(planned_u.size()));
  std::vector<Vector4> out;
  out.reserve(planned_u.size());
  for (std::size_t j = 0; j < planned_u.size(); ++j)
    out.push_back(Vector4(core[j]) + c_matrix_ * (planned_u[j] - baseline(planned_u[j])));
  return out;
}

namespace {

struct PreparedSeries {
  Eigen::MatrixXd errors;
  Eigen::MatrixXd deviations;
};

PreparedSeries prepare(const ErrorBuffer& buffer, const ErrorModelFitOptions& options, std::size_t count) {
  PreparedSeries s;
  s.errors = buffer.errors(count);
  const Eigen::MatrixXd u = buffer.inputs(count);
  s.deviations.resize(u.rows(), 12);
  for (Eigen::Index t = 0; t < u.rows(); ++t) {
    const Vector12 row = u.row(t).transpose();
    s.deviations.row(t) = (row - input_baseline(row, options.supported_weight)).transpose();
  }
  return s;
}

Matrix4x12 estimate_gain(const PreparedSeries& s, int p, const ErrorModelFitOptions& options) {
  if (!options.estimate_input_gain) return Matrix4x12::Zero();
  const ArLsFit joint = fit_ar_ls(SeriesWindow(s.errors), p, s.deviations);
  return joint.exog_gain;
}

ErrorModelFit finish(ArmavFit core_fit, const Matrix4x12& c, const ErrorModelFitOptions& options, int n,
                     int m) {
  ErrorModelFit out;
  out.n = n;
  out.m = m;
  out.diagnostics = core_fit.diagnostics;
  out.residuals = core_fit.residuals.bottomRows(core_fit.residuals.rows() - core_fit.burn_in);
  out.model = InputAwareErrorModel(std::move(core_fit.model), c, options.supported_weight);
  return out;
}

}  // namespace

ErrorModelFit fit_error_model(const ErrorBuffer& buffer, int n, int m, const ErrorModelFitOptions& options,
                              std::size_t count) {
  const PreparedSeries s = prepare(buffer, options, count);
  if (s.errors.rows() < minimum_samples(n, m, kErrorChannels))
    throw Error(ErrorCode::InsufficientData, "error buffer shorter than the minimum sample count");
  const Matrix4x12 c = estimate_gain(s, std::max(n, m) + m, options);
  const Eigen::MatrixXd input_free = s.errors - s.deviations * c.transpose();
  return finish(fit_armav(SeriesWindow(input_free), n, m), c, options, n, m);
}

ErrorModelFit fit_error_model_auto(const ErrorBuffer& buffer, double alpha, int max_k,
                                   const ErrorModelFitOptions& options, std::size_t count) {
  const PreparedSeries s = prepare(buffer, options, count);
  // The gain is estimated with the AR length of the largest candidate order.
  const Matrix4x12 c = estimate_gain(s, (2 * max_k + 2) + (2 * max_k + 1), options);
  const Eigen::MatrixXd input_free = s.errors - s.deviations * c.transpose();
  OrderSelection sel = select_order(SeriesWindow(input_free), alpha, max_k);
  return finish(std::move(sel.fit), c, options, sel.n, sel.m);
}

SelectMatrix SelectMatrix::standard() {
  SelectMatrix out;
  out.s.setZero();
  out.s(0, 0) = 1.0;
  out.s(1, 1) = 1.0;
  out.s(2, 2) = 1.0;
  out.s(5, 3) = 1.0;
  return out;
}

std::vector<Vector13> compensation_term(const std::vector<Vector4>& predicted_errors, const SelectMatrix& select) {
  std::vector<Vector13> out;
  out.reserve(predicted_errors.size());
  for (const auto& e : predicted_errors) out.push_back(select.s * e);
  return out;
}

AdequacyReport adequacy_check(const Eigen::MatrixXd& recent_residuals, int max_lag) {
  AdequacyReport report;
  report.n_samples = static_cast<int>(recent_residuals.rows());
  if (report.n_samples < 100) {
    report.reason = "fewer than 100 residuals";
    return report;
  }
  try {
    report.autocorr = residual_autocorrelation(recent_residuals, max_lag);
  } catch (const Error& e) {
    report.reason = e.code() == ErrorCode::ZeroVariance ? "ZeroVariance" : e.what();
    return report;
  }
  report.fraction_inside = whiteness_fraction(report.autocorr, report.n_samples);
  report.pass = report.fraction_inside >= 0.95;
  if (!report.pass) report.reason = "residual autocorrelation outside 2/sqrt(N) bounds";
  return report;
}

AdequacyReport adequacy_check(const InputAwareErrorModel& model, const Eigen::MatrixXd& recent_residuals,
                              int max_lag) {
  AdequacyReport report = adequacy_check(recent_residuals, max_lag);
  if (!report.pass) return report;
  if (!(model.core().ar_spectral_radius() < kStationarityLimit)) {
    report.pass = false;
    report.reason = "AR part not stationary";
  } else if (!(model.core().ma_spectral_radius() < 1.0)) {
    report.pass = false;
    report.reason = "MA part not invertible";
  }
  return report;
}

OnlineErrorModel::OnlineErrorModel(OnlineErrorModelConfig config)
    : config_(config), buffer_(config.capacity) {}

void OnlineErrorModel::record(const ErrorSample& sample) {
  buffer_.push(sample);
  if (model_ && model_->warm())
    model_->observe(sample);
  else if (model_)
    model_->core().push_history(model_->input_free(sample), Eigen::VectorXd::Zero(kErrorChannels));
  ++since_refit_;
  if (config_.refit_every <= 0 || buffer_.size() < config_.min_samples) return;
  const int due = usable_ ? config_.refit_every : std::max(1, config_.refit_every / 5);
  if (!model_ || since_refit_ >= due) refit();
}

bool OnlineErrorModel::refit() {
  since_refit_ = 0;
  ++refits_;
  const std::size_t count = config_.fit_window == 0 ? 0 : config_.fit_window;
  const ErrorModelFitOptions options{config_.supported_weight, config_.estimate_input_gain};
  try {
    ErrorModelFit fit = config_.auto_order
                            ? fit_error_model_auto(buffer_, config_.alpha, config_.max_k, options, count)
                            : fit_error_model(buffer_, config_.ar_order, config_.ma_order, options, count);
    report_ = adequacy_check(fit.model, fit.residuals);
    model_ = std::move(fit.model);
    usable_ = report_.pass || !config_.adequacy_gating;
  } catch (const Error& e) {
    ++failed_;
    report_ = AdequacyReport{};
    report_.reason = e.what();
  }
  return usable_;
}

void OnlineErrorModel::install(InputAwareErrorModel model) {
  model_ = std::move(model);
  model_->core().clear_history();
  usable_ = true;
  since_refit_ = 0;
}

std::optional<std::vector<Vector4>> OnlineErrorModel::forecast(const std::vector<Vector12>& planned_u) const {
  if (!active() || !model_->warm()) return std::nullopt;
  return model_->predict_errors(planned_u);
}

}  // namespace ecmpc
