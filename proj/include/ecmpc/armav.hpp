#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <deque>
#include <string>
#include <vector>

namespace ecmpc {

using MatrixList = std::vector<Eigen::MatrixXd>;

/// Time-ordered samples of an r-dimensional series, one row per tick.
///
/// The sample mean is computed once on construction; every fit works on the
/// demeaned data and adds the mean back onto predictions.
class SeriesWindow {
 public:
  explicit SeriesWindow(Eigen::MatrixXd samples);
  static SeriesWindow from_samples(const std::vector<Eigen::VectorXd>& samples);

  int length() const { return static_cast<int>(samples_.rows()); }
  int dim() const { return static_cast<int>(samples_.cols()); }
  const Eigen::MatrixXd& samples() const { return samples_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::MatrixXd demeaned() const;

 private:
  Eigen::MatrixXd samples_;
  Eigen::VectorXd mean_;
};

/// (max(n,m)+m)*r + 10
int minimum_samples(int n, int m, int r);

/// Coefficients I_1..I_L of the pure-AR expansion a_t = z_t - sum I_j z_{t-j}.
struct InverseExpansion {
  MatrixList coeffs;
  int length() const { return static_cast<int>(coeffs.size()); }
};

struct FitDiagnostics {
  Eigen::VectorXd rss_per_channel;
  double rss = 0.0;       // trace of the residual Gram
  int n_samples = 0;      // residual rows entering rss
  int n_params = 0;       // scalar parameters estimated
  double f_statistic = 0.0;
  std::vector<Eigen::VectorXd> autocorr;  // per channel, lags 1..L
};

struct ArLsFit {
  InverseExpansion coeffs;
  Eigen::MatrixXd exog_gain;  // r x q, empty without exogenous regressors
  Eigen::MatrixXd residuals;  // (N - p) x r
  FitDiagnostics diagnostics;
};

/// Least-squares AR(p) fit on the demeaned window.
///
/// The Gram matrix gets a ridge of 1e-8 * trace/dim on its diagonal. Throws
/// InsufficientData when N < p*r + 10 and SingularRegressor when the ridged
/// Gram still cannot be factored.
ArLsFit fit_ar_ls(const SeriesWindow& window, int p);

/// Same as above with exogenous regressors appended to every row. `exog` has
/// one row per sample of the window and is demeaned internally; its gain is
/// returned in exog_gain.
ArLsFit fit_ar_ls(const SeriesWindow& window, int p, const Eigen::MatrixXd& exog);

/// Solves (E - Theta_1 B - ... - Theta_m B^m) I_j = 0 for j = max(n,m)+1..L,
/// in the least-squares sense when L > max(n,m)+m.
MatrixList theta_from_inverse(const InverseExpansion& inv, int n, int m);

/// Phi_j = Theta_j - Theta_1 I_{j-1} - ... - Theta_{j-1} I_1 + I_j, j = 1..n.
MatrixList phi_from_inverse(const InverseExpansion& inv, const MatrixList& theta, int n);

/// Vector ARMA(n, m) model with its residual and data history.
///
/// History buffers store demeaned data and residuals newest first. A model
/// built from explicit coefficients starts with zero-filled, warm buffers;
/// clear_history() makes it cold until push_history() has refilled it.
class ArmavModel {
 public:
  ArmavModel() = default;
  ArmavModel(MatrixList phi, MatrixList theta, Eigen::VectorXd mean = {});

  int ar_order() const { return static_cast<int>(phi_.size()); }
  int ma_order() const { return static_cast<int>(theta_.size()); }
  int dim() const { return static_cast<int>(mean_.size()); }
  int history_size() const { return std::max(ar_order(), ma_order()); }

  const MatrixList& phi() const { return phi_; }
  const MatrixList& theta() const { return theta_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& residual_variance() const { return residual_variance_; }
  void set_residual_variance(Eigen::MatrixXd v) { residual_variance_ = std::move(v); }

  bool warm() const { return filled_ >= history_size(); }

  /// z_hat_{t+1} = sum Phi_i z_{t-i+1} - sum Theta_i a_{t-i+1} (+ mean).
  Eigen::VectorXd predict_one_step() const;

  /// Iterated forecast: future data replaced by forecasts, future residuals by
  /// zero. Element 0 equals predict_one_step() exactly.
  std::vector<Eigen::VectorXd> predict_k_steps(int k) const;

  /// Appends a_{t+1} = z_new - z_hat_{t+1} and shifts both buffers. Returns
  /// the residual.
  Eigen::VectorXd observe(const Eigen::VectorXd& z_new);

  /// Shifts a raw sample and a known residual into the buffers without
  /// predicting; used to warm a cold model.
  void push_history(const Eigen::VectorXd& z, const Eigen::VectorXd& residual);

  void reset();          // zero buffers, warm
  void clear_history();  // zero buffers, cold

  /// Newest-first views of the buffers (data demeaned).
  const std::deque<Eigen::VectorXd>& data_history() const { return data_; }
  const std::deque<Eigen::VectorXd>& residual_history() const { return residuals_; }

  double ar_spectral_radius() const;
  double ma_spectral_radius() const;
  /// Spectral radius in [1, 1.05): accepted but carries a slow drift.
  bool drifting() const { return ar_spectral_radius() >= 1.0; }

 private:
  Eigen::VectorXd one_step(const std::deque<Eigen::VectorXd>& data,
                           const std::deque<Eigen::VectorXd>& residuals) const;
  void require_warm() const;

  MatrixList phi_;
  MatrixList theta_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd residual_variance_;
  std::deque<Eigen::VectorXd> data_;
  std::deque<Eigen::VectorXd> residuals_;
  int filled_ = 0;
};

/// Largest spectral radius tolerated for a fitted AR part.
inline constexpr double kStationarityLimit = 1.05;

struct ArmavFit {
  ArmavModel model;
  FitDiagnostics diagnostics;
  Eigen::MatrixXd residuals;  // one row per window sample; rows < burn_in are start-up transients
  int burn_in = 0;
};

/// Inverse-function estimate of ARMAV(n, m): AR(p) least squares with
/// p = max(n,m)+m, then Theta and Phi recovery. The residual sequence is
/// rebuilt by filtering the window through the fitted model, which also
/// leaves the model's buffers positioned at the end of the window.
ArmavFit fit_armav(const SeriesWindow& window, int n, int m);

/// ((A1 - A0)/s) / (A0/(N - r)). Returns +infinity when A0 == 0 and A1 > 0.
double f_statistic(double rss_restricted, double rss_unrestricted, long s, long n, long r_params);

/// Upper quantile of F(d1, d2) at confidence alpha.
double f_quantile(double alpha, double d1, double d2);

struct OrderSelection {
  int n = 0;
  int m = 0;
  ArmavFit fit;
  bool max_order_reached = false;
};

/// F-test order search: grows ARMAV(2k, 2k-1) -> ARMAV(2k+2, 2k+1) while the
/// RSS drop is significant, then lowers m while the increase is not. A
/// candidate whose mixed fit is nonstationary or non-invertible is replaced by
/// the pure AR(2k) fit. Throws NonStationary when not even AR(2) is usable.
OrderSelection select_order(const SeriesWindow& window, double alpha = 0.95, int max_k = 4);

/// rho_l = (sum_{t} a_t a_{t+l} / (N-l)) / (sum a_t^2 / N) per channel, lags
/// 1..max_lag. Throws ZeroVariance for a channel with no energy.
std::vector<Eigen::VectorXd> residual_autocorrelation(const Eigen::MatrixXd& residuals,
                                                      int max_lag);

/// Fraction of (channel, lag) pairs with |rho| <= 2/sqrt(n_samples).
double whiteness_fraction(const std::vector<Eigen::VectorXd>& autocorr, int n_samples);

std::string armav_to_json(const ArmavModel& model, int indent = 2);
ArmavModel armav_from_json(const std::string& text);

}  // namespace ecmpc
