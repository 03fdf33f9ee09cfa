#include "ecmpc/armav.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <json.hpp>

#include <cmath>
#include <limits>
#include <optional>

#include "ecmpc/errors.hpp"

namespace ecmpc {

namespace {

constexpr double kRidgeScale = 1e-8;

double companion_radius(const MatrixList& blocks) {
  if (blocks.empty()) return 0.0;
  const Eigen::Index r = blocks.front().rows();
  const Eigen::Index order = static_cast<Eigen::Index>(blocks.size());
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(order * r, order * r);
  for (Eigen::Index i = 0; i < order; ++i) companion.block(0, i * r, r, r) = blocks[i];
  if (order > 1) companion.block(r, 0, (order - 1) * r, (order - 1) * r).setIdentity();
  if (!companion.allFinite()) return std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double rss_from(const Eigen::MatrixXd& residuals, int start) {
  const Eigen::Index rows = residuals.rows() - start;
  if (rows <= 0) return 0.0;
  return residuals.bottomRows(rows).squaredNorm();
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not finite");
}

ArLsFit fit_ar_ls_impl(const SeriesWindow& window, int p, const Eigen::MatrixXd* exog) {
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "AR order must be >= 1");
  const int n_rows = window.length();
  const int r = window.dim();
  const int q = exog ? static_cast<int>(exog->cols()) : 0;
  if (exog && exog->rows() != n_rows)
    throw Error(ErrorCode::DimensionMismatch, "exogenous regressors need one row per sample");
  if (n_rows < p * r + q + 10)
    throw Error(ErrorCode::InsufficientData,
                "window of " + std::to_string(n_rows) + " samples too short for AR(" +
                    std::to_string(p) + ")");

  const Eigen::MatrixXd z = window.demeaned();
  Eigen::MatrixXd x_dm;
  if (exog) {
    check_finite(*exog, "exogenous input");
    x_dm = exog->rowwise() - exog->colwise().mean();
  }

  const int rows = n_rows - p;
  const int k = p * r + q;
  Eigen::MatrixXd x(rows, k);
  for (int t = p; t < n_rows; ++t) {
    for (int i = 1; i <= p; ++i) x.block(t - p, (i - 1) * r, 1, r) = z.row(t - i);
    if (q > 0) x.block(t - p, p * r, 1, q) = x_dm.row(t);
  }
  const Eigen::MatrixXd y = z.bottomRows(rows);

  Eigen::MatrixXd gram = x.transpose() * x;
  const double trace = gram.trace();
  if (!(trace > 0.0) || !std::isfinite(trace))
    throw Error(ErrorCode::SingularRegressor, "regressor Gram matrix has zero trace");
  gram.diagonal().array() += kRidgeScale * trace / k;

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularRegressor, "ridged Gram matrix is not positive definite");
  const Eigen::MatrixXd coeffs = llt.solve(x.transpose() * y);
  if (!coeffs.allFinite()) throw Error(ErrorCode::SingularRegressor, "non-finite AR coefficients");

  ArLsFit fit;
  fit.coeffs.coeffs.reserve(p);
  for (int i = 0; i < p; ++i) fit.coeffs.coeffs.push_back(coeffs.block(i * r, 0, r, r).transpose());
  if (q > 0) fit.exog_gain = coeffs.bottomRows(q).transpose();
  fit.residuals = y - x * coeffs;
  fit.diagnostics.rss_per_channel = fit.residuals.colwise().squaredNorm().transpose();
  fit.diagnostics.rss = fit.diagnostics.rss_per_channel.sum();
  fit.diagnostics.n_samples = rows;
  fit.diagnostics.n_params = k * r;
  return fit;
}

}  // namespace

SeriesWindow::SeriesWindow(Eigen::MatrixXd samples) : samples_(std::move(samples)) {
  if (samples_.cols() < 1) throw Error(ErrorCode::InvalidArgument, "series dimension must be >= 1");
  check_finite(samples_, "series window");
  mean_ = samples_.rows() > 0 ? Eigen::VectorXd(samples_.colwise().mean().transpose())
                              : Eigen::VectorXd::Zero(samples_.cols());
}

SeriesWindow SeriesWindow::from_samples(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "empty series");
  Eigen::MatrixXd m(samples.size(), samples.front().size());
  for (std::size_t t = 0; t < samples.size(); ++t) {
    if (samples[t].size() != m.cols())
      throw Error(ErrorCode::DimensionMismatch, "series samples differ in dimension");
    m.row(static_cast<Eigen::Index>(t)) = samples[t].transpose();
  }
  return SeriesWindow(std::move(m));
}

Eigen::MatrixXd SeriesWindow::demeaned() const {
  return samples_.rowwise() - mean_.transpose();
}

int minimum_samples(int n, int m, int r) { return (std::max(n, m) + m) * r + 10; }

ArLsFit fit_ar_ls(const SeriesWindow& window, int p) { return fit_ar_ls_impl(window, p, nullptr); }

ArLsFit fit_ar_ls(const SeriesWindow& window, int p, const Eigen::MatrixXd& exog) {
  return fit_ar_ls_impl(window, p, &exog);
}

MatrixList theta_from_inverse(const InverseExpansion& inv, int n, int m) {
  if (n < 0 || m < 0) throw Error(ErrorCode::InvalidArgument, "negative model order");
  if (m == 0) return {};
  const int q = std::max(n, m);
  const int len = inv.length();
  if (len < q + m)
    throw Error(ErrorCode::InvalidArgument, "inverse expansion shorter than max(n,m)+m");
  const Eigen::Index r = inv.coeffs.front().rows();
  auto coeff = [&](int j) -> const Eigen::MatrixXd& { return inv.coeffs[j - 1]; };

  // Theta * M = R with M stacking I_{j-1..j-m} for every equation j.
  const int eqs = len - q;
  Eigen::MatrixXd lhs(m * r, eqs * r);
  Eigen::MatrixXd rhs(r, eqs * r);
  for (int e = 0; e < eqs; ++e) {
    const int j = q + 1 + e;
    rhs.block(0, e * r, r, r) = coeff(j);
    for (int i = 1; i <= m; ++i) lhs.block((i - 1) * r, e * r, r, r) = coeff(j - i);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs.transpose());
  qr.setThreshold(1e-12);
  if (qr.rank() < m * r)
    throw Error(ErrorCode::SingularSystem, "inverse-coefficient block is rank deficient");
  const Eigen::MatrixXd theta_t = qr.solve(rhs.transpose());

  MatrixList theta;
  theta.reserve(m);
  for (int i = 0; i < m; ++i) theta.push_back(theta_t.block(i * r, 0, r, r).transpose());
  return theta;
}

MatrixList phi_from_inverse(const InverseExpansion& inv, const MatrixList& theta, int n) {
  if (inv.length() < n) throw Error(ErrorCode::InvalidArgument, "inverse expansion shorter than n");
  if (n == 0) return {};
  const Eigen::Index r = inv.coeffs.front().rows();
  const int m = static_cast<int>(theta.size());
  for (const auto& t : theta)
    if (t.rows() != r || t.cols() != r) throw Error(ErrorCode::DimensionMismatch, "theta block shape");

  MatrixList phi;
  phi.reserve(n);
  for (int j = 1; j <= n; ++j) {
    Eigen::MatrixXd pj = inv.coeffs[j - 1];
    if (j <= m) pj += theta[j - 1];
    for (int i = 1; i <= std::min(j - 1, m); ++i) pj -= theta[i - 1] * inv.coeffs[j - i - 1];
    phi.push_back(std::move(pj));
  }
  return phi;
}

// ---------------------------------------------------------------------------
// ArmavModel

ArmavModel::ArmavModel(MatrixList phi, MatrixList theta, Eigen::VectorXd mean)
    : phi_(std::move(phi)), theta_(std::move(theta)), mean_(std::move(mean)) {
  Eigen::Index r = -1;
  for (const auto* list : {&phi_, &theta_})
    for (const auto& blk : *list) {
      if (blk.rows() != blk.cols()) throw Error(ErrorCode::DimensionMismatch, "coefficient not square");
      if (r < 0) r = blk.rows();
      if (blk.rows() != r) throw Error(ErrorCode::DimensionMismatch, "coefficient sizes differ");
      check_finite(blk, "model coefficient");
    }
  if (r < 0) r = mean_.size();
  if (r <= 0) throw Error(ErrorCode::InvalidArgument, "cannot infer model dimension");
  if (mean_.size() == 0) mean_ = Eigen::VectorXd::Zero(r);
  if (mean_.size() != r) throw Error(ErrorCode::DimensionMismatch, "mean size");
  residual_variance_ = Eigen::MatrixXd::Zero(r, r);
  reset();
}

void ArmavModel::reset() {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim());
  data_.assign(ar_order(), zero);
  residuals_.assign(history_size(), zero);
  filled_ = history_size();
}

void ArmavModel::clear_history() {
  reset();
  filled_ = 0;
}

void ArmavModel::require_warm() const {
  if (dim() == 0) throw Error(ErrorCode::BuffersNotWarm, "model has no coefficients");
  if (!warm()) throw Error(ErrorCode::BuffersNotWarm, "history buffers not filled");
}

Eigen::VectorXd ArmavModel::one_step(const std::deque<Eigen::VectorXd>& data,
                                     const std::deque<Eigen::VectorXd>& residuals) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < ar_order(); ++i) z.noalias() += phi_[i] * data[i];
  for (int i = 0; i < ma_order(); ++i) z.noalias() -= theta_[i] * residuals[i];
  return z;
}

Eigen::VectorXd ArmavModel::predict_one_step() const {
  require_warm();
  return one_step(data_, residuals_) + mean_;
}

std::vector<Eigen::VectorXd> ArmavModel::predict_k_steps(int k) const {
  require_warm();
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  std::deque<Eigen::VectorXd> data = data_;
  std::deque<Eigen::VectorXd> residuals = residuals_;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim());
  std::vector<Eigen::VectorXd> out;
  out.reserve(k);
  for (int step = 0; step < k; ++step) {
    Eigen::VectorXd z = one_step(data, residuals);
    out.push_back(z + mean_);
    if (!data.empty()) {
      data.push_front(std::move(z));
      data.pop_back();
    }
    if (!residuals.empty()) {
      residuals.push_front(zero);
      residuals.pop_back();
    }
  }
  return out;
}

Eigen::VectorXd ArmavModel::observe(const Eigen::VectorXd& z_new) {
  require_warm();
  if (z_new.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "observation size");
  const Eigen::VectorXd z = z_new - mean_;
  Eigen::VectorXd a = z - one_step(data_, residuals_);
  if (!data_.empty()) {
    data_.push_front(z);
    data_.pop_back();
  }
  if (!residuals_.empty()) {
    residuals_.push_front(a);
    residuals_.pop_back();
  }
  return a;
}

void ArmavModel::push_history(const Eigen::VectorXd& z, const Eigen::VectorXd& residual) {
  if (z.size() != dim() || residual.size() != dim())
    throw Error(ErrorCode::DimensionMismatch, "history sample size");
  if (!data_.empty()) {
    data_.push_front(z - mean_);
    data_.pop_back();
  }
  if (!residuals_.empty()) {
    residuals_.push_front(residual);
    residuals_.pop_back();
  }
  filled_ = std::min(filled_ + 1, history_size());
}

double ArmavModel::ar_spectral_radius() const { return companion_radius(phi_); }
double ArmavModel::ma_spectral_radius() const { return companion_radius(theta_); }

// ---------------------------------------------------------------------------
// Estimation pipeline

ArmavFit fit_armav(const SeriesWindow& window, int n, int m) {
  if (n < 1 || m < 0) throw Error(ErrorCode::InvalidArgument, "ARMAV orders need n >= 1, m >= 0");
  const int r = window.dim();
  if (window.length() < minimum_samples(n, m, r))
    throw Error(ErrorCode::InsufficientData,
                "window of " + std::to_string(window.length()) + " samples too short for ARMAV(" +
                    std::to_string(n) + "," + std::to_string(m) + ")");

  const int p = std::max(n, m) + m;
  ArLsFit ar = fit_ar_ls(window, p);
  MatrixList theta = theta_from_inverse(ar.coeffs, n, m);
  MatrixList phi = phi_from_inverse(ar.coeffs, theta, n);

  ArmavFit fit;
  fit.model = ArmavModel(std::move(phi), std::move(theta), window.mean());
  const double rho = fit.model.ar_spectral_radius();
  if (!(rho < kStationarityLimit))
    throw Error(ErrorCode::NonStationary, "AR spectral radius " + std::to_string(rho));
  if (!(fit.model.ma_spectral_radius() < 1.0))
    throw Error(ErrorCode::NonInvertible, "MA part is not invertible");

  // Residual filter; pre-sample history is the mean (zero deviation).
  const int len = window.length();
  fit.residuals.resize(len, r);
  for (int t = 0; t < len; ++t)
    fit.residuals.row(t) = fit.model.observe(window.samples().row(t).transpose()).transpose();
  fit.burn_in = p;

  const Eigen::MatrixXd used = fit.residuals.bottomRows(len - p);
  fit.model.set_residual_variance(used.transpose() * used / static_cast<double>(used.rows()));
  fit.diagnostics.rss_per_channel = used.colwise().squaredNorm().transpose();
  fit.diagnostics.rss = fit.diagnostics.rss_per_channel.sum();
  fit.diagnostics.n_samples = static_cast<int>(used.rows());
  fit.diagnostics.n_params = (n + m) * r * r;
  const int lags = std::min(20, static_cast<int>(used.rows()) - 1);
  if (lags >= 1) {
    try {
      fit.diagnostics.autocorr = residual_autocorrelation(used, lags);
    } catch (const Error&) {
      // zero-variance residuals: leave autocorrelation empty
    }
  }
  return fit;
}

double f_statistic(double rss_restricted, double rss_unrestricted, long s, long n, long r_params) {
  if (!(rss_unrestricted >= 0.0) || !(rss_restricted >= rss_unrestricted))
    throw Error(ErrorCode::InvalidArgument, "F statistic needs A1 >= A0 >= 0");
  if (s < 1 || n <= r_params) throw Error(ErrorCode::InvalidArgument, "F statistic degrees of freedom");
  if (rss_restricted == rss_unrestricted) return 0.0;
  if (rss_unrestricted == 0.0) return std::numeric_limits<double>::infinity();
  return ((rss_restricted - rss_unrestricted) / static_cast<double>(s)) /
         (rss_unrestricted / static_cast<double>(n - r_params));
}

double f_quantile(double alpha, double d1, double d2) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(d1 > 0.0) || !(d2 > 0.0))
    throw Error(ErrorCode::InvalidArgument, "F quantile arguments");
  return boost::math::quantile(boost::math::fisher_f(d1, d2), alpha);
}

namespace {

std::optional<ArmavFit> try_fit(const SeriesWindow& window, int n, int m) {
  try {
    ArmavFit fit = fit_armav(window, n, m);
    if (!std::isfinite(fit.diagnostics.rss)) return std::nullopt;
    return fit;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InsufficientData) throw;
    return std::nullopt;
  }
}

// ARMAV(n, m), or AR(n) when the mixed fit is unusable (the short inverse
// expansion can put the recovered AR part far outside the unit circle).
// `m` is set to the order actually fitted.
std::optional<ArmavFit> candidate(const SeriesWindow& window, int n, int& m) {
  if (auto fit = try_fit(window, n, m)) return fit;
  if (m == 0) return std::nullopt;
  m = 0;
  return try_fit(window, n, 0);
}

// F statistic of `restricted` against `unrestricted` over a shared residual range.
// A failed or worse unrestricted fit counts as no improvement.
double compare(const ArmavFit& restricted, const ArmavFit* unrestricted) {
  if (!unrestricted) return 0.0;
  const int r = restricted.model.dim();
  const int start = std::max(restricted.burn_in, unrestricted->burn_in);
  const double a1 = rss_from(restricted.residuals, start);
  const double a0 = rss_from(unrestricted->residuals, start);
  if (!(a0 < a1)) return 0.0;
  const long rows = static_cast<long>(restricted.residuals.rows()) - start;
  const long params_u =
      static_cast<long>(unrestricted->model.ar_order() + unrestricted->model.ma_order()) * r * r;
  const long params_r =
      static_cast<long>(restricted.model.ar_order() + restricted.model.ma_order()) * r * r;
  return f_statistic(a1, a0, params_u - params_r, rows * r, params_u);
}

double critical_value(const ArmavFit& restricted, const ArmavFit& unrestricted, double alpha) {
  const int r = restricted.model.dim();
  const int start = std::max(restricted.burn_in, unrestricted.burn_in);
  const long rows = static_cast<long>(restricted.residuals.rows()) - start;
  const long params_u =
      static_cast<long>(unrestricted.model.ar_order() + unrestricted.model.ma_order()) * r * r;
  const long params_r =
      static_cast<long>(restricted.model.ar_order() + restricted.model.ma_order()) * r * r;
  return f_quantile(alpha, static_cast<double>(params_u - params_r),
                    static_cast<double>(rows * r - params_u));
}

}  // namespace

OrderSelection select_order(const SeriesWindow& window, double alpha, int max_k) {
  if (max_k < 1) throw Error(ErrorCode::InvalidArgument, "max_k must be >= 1");
  const int r = window.dim();
  if (window.length() < minimum_samples(2 * max_k + 2, 2 * max_k + 1, r))
    throw Error(ErrorCode::InsufficientData, "window too short for the requested max_k");

  OrderSelection out;
  int n = 2, m = 1;
  std::optional<ArmavFit> first = candidate(window, n, m);  // may lower m to 0
  if (!first) throw Error(ErrorCode::NonStationary, "neither ARMAV(2,1) nor AR(2) gives a usable fit");
  ArmavFit current = std::move(*first);
  double last_f = 0.0;
  bool settled = false;
  for (int k = 1; k <= max_k; ++k) {
    int next_m = 2 * k + 1;
    std::optional<ArmavFit> bigger = candidate(window, 2 * k + 2, next_m);
    const double f = compare(current, bigger ? &*bigger : nullptr);
    last_f = f;
    if (!bigger || f < critical_value(current, *bigger, alpha)) {
      settled = true;
      break;
    }
    current = std::move(*bigger);
    n = 2 * k + 2;
    m = next_m;
  }
  out.max_order_reached = !settled;

  // Lower the MA order while dropping a lag does not raise the RSS significantly.
  while (m > 0) {
    std::optional<ArmavFit> smaller = try_fit(window, n, m - 1);
    if (!smaller) break;
    const double f = compare(*smaller, &current);
    if (f >= critical_value(*smaller, current, alpha)) break;
    current = std::move(*smaller);
    --m;
    last_f = f;
  }

  out.n = n;
  out.m = m;
  out.fit = std::move(current);
  out.fit.diagnostics.f_statistic = last_f;
  return out;
}

std::vector<Eigen::VectorXd> residual_autocorrelation(const Eigen::MatrixXd& residuals, int max_lag) {
  const Eigen::Index len = residuals.rows();
  if (max_lag < 1 || len <= max_lag)
    throw Error(ErrorCode::InsufficientData, "need more residuals than lags");
  std::vector<Eigen::VectorXd> out;
  out.reserve(residuals.cols());
  for (Eigen::Index c = 0; c < residuals.cols(); ++c) {
    const Eigen::VectorXd a = residuals.col(c);
    const double variance = a.squaredNorm() / static_cast<double>(len);
    if (!(variance > 0.0))
      throw Error(ErrorCode::ZeroVariance, "channel " + std::to_string(c) + " has zero variance");
    Eigen::VectorXd rho(max_lag);
    for (int l = 1; l <= max_lag; ++l) {
      const double cov = a.head(len - l).dot(a.tail(len - l)) / static_cast<double>(len - l);
      rho(l - 1) = cov / variance;
    }
    out.push_back(std::move(rho));
  }
  return out;
}

double whiteness_fraction(const std::vector<Eigen::VectorXd>& autocorr, int n_samples) {
  if (autocorr.empty() || n_samples <= 0) return 0.0;
  const double bound = 2.0 / std::sqrt(static_cast<double>(n_samples));
  long inside = 0, total = 0;
  for (const auto& rho : autocorr) {
    inside += (rho.array().abs() <= bound).count();
    total += rho.size();
  }
  return total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json matrix_rows(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& rows, Eigen::Index r) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != r)
    throw Error(ErrorCode::ParseError, "matrix must have one row per dimension");
  Eigen::MatrixXd m(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != r) throw Error(ErrorCode::ParseError, "matrix row");
    for (Eigen::Index j = 0; j < r; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from(const nlohmann::json& v) {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  return out;
}

}  // namespace

std::string armav_to_json(const ArmavModel& model, int indent) {
  nlohmann::json j;
  j["format"] = "ecmpc.armav/1";
  j["dim"] = model.dim();
  j["ar_order"] = model.ar_order();
  j["ma_order"] = model.ma_order();
  j["mean"] = std::vector<double>(model.mean().data(), model.mean().data() + model.mean().size());
  j["phi"] = nlohmann::json::array();
  for (const auto& p : model.phi()) j["phi"].push_back(matrix_rows(p));
  j["theta"] = nlohmann::json::array();
  for (const auto& t : model.theta()) j["theta"].push_back(matrix_rows(t));
  j["residual_variance"] = matrix_rows(model.residual_variance());
  j["ar_spectral_radius"] = model.ar_spectral_radius();
  j["ma_spectral_radius"] = model.ma_spectral_radius();
  nlohmann::json data = nlohmann::json::array(), res = nlohmann::json::array();
  for (const auto& z : model.data_history()) data.push_back(std::vector<double>(z.data(), z.data() + z.size()));
  for (const auto& a : model.residual_history()) res.push_back(std::vector<double>(a.data(), a.data() + a.size()));
  j["history"] = {{"data", data}, {"residuals", res}, {"warm", model.warm()}};
  return j.dump(indent);
}

ArmavModel armav_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  try {
    const Eigen::Index r = j.at("dim").get<Eigen::Index>();
    MatrixList phi, theta;
    for (const auto& p : j.at("phi")) phi.push_back(matrix_from(p, r));
    for (const auto& t : j.at("theta")) theta.push_back(matrix_from(t, r));
    if (static_cast<int>(phi.size()) != j.at("ar_order").get<int>() ||
        static_cast<int>(theta.size()) != j.at("ma_order").get<int>())
      throw Error(ErrorCode::ParseError, "order does not match coefficient count");
    ArmavModel model(std::move(phi), std::move(theta), vector_from(j.at("mean")));
    if (j.contains("residual_variance")) model.set_residual_variance(matrix_from(j["residual_variance"], r));
    if (j.contains("history")) {
      const auto& h = j["history"];
      const auto& data = h.at("data");
      const auto& res = h.at("residuals");
      if (static_cast<int>(data.size()) != model.ar_order() ||
          static_cast<int>(res.size()) != model.history_size())
        throw Error(ErrorCode::ParseError, "history length");
      model.clear_history();
      // Stored newest first; replay oldest first.
      const Eigen::VectorXd zero = Eigen::VectorXd::Zero(r);
      for (int i = model.history_size() - 1; i >= 0; --i) {
        const Eigen::VectorXd z =
            i < model.ar_order() ? Eigen::VectorXd(vector_from(data[i]) + model.mean()) : model.mean();
        model.push_history(z, vector_from(res[i]));
      }
      if (!h.value("warm", true)) model.clear_history();
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

}  // namespace ecmpc
