#include <doctest.h>

#include <random>
#include <sstream>

#include "ecmpc/error_model.hpp"
#include "ecmpc/errors.hpp"
#include "support.hpp"

using namespace ecmpc;
using namespace ecmpc::testing;

namespace {

// Input-free part is a diagonal AR(1); inputs are stance forces of 50 N per
// leg plus white noise, so deviations from a 200 N baseline are zero mean.
ErrorBuffer synthetic_log(const Matrix4x12& c, int length, std::uint64_t seed, double noise = 1e-3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ErrorBuffer buffer(static_cast<std::size_t>(length));
  Vector4 core = Vector4::Zero();
  for (int t = 0; t < length; ++t) {
    Vector12 u;
    for (int i = 0; i < 12; ++i) u(i) = (i % 3 == 2 ? 50.0 : 0.0) + 5.0 * normal(rng);
    for (int i = 0; i < 4; ++i) core(i) = 0.7 * core(i) + noise * normal(rng);
    ErrorSample s;
    s.tick = t;
    s.u = u;
    s.e = core + c * (u - input_baseline(u, 200.0));
    buffer.push(s);
  }
  return buffer;
}

Matrix4x12 random_gain(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1e-3, 1e-3);
  Matrix4x12 c;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 12; ++j) c(i, j) = uni(rng);
  return c;
}

}  // namespace

TEST_CASE("buffer keeps the newest samples in tick order") {
  ErrorBuffer buffer(3);
  for (int t = 0; t < 5; ++t) {
    ErrorSample s;
    s.tick = t;
    s.e(3) = t;
    buffer.push(s);
  }
  CHECK(buffer.size() == 3);
  CHECK(buffer[0].tick == 2);
  CHECK(buffer.errors(2)(0, 3) == 3.0);
  CHECK(buffer.errors().rows() == 3);

  ErrorSample stale;
  stale.tick = 4;
  try {
    buffer.push(stale);
    FAIL("expected NonMonotonicTick");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonMonotonicTick);
  }
  stale.tick = 9;
  stale.e(0) = std::nan("");
  CHECK_THROWS_AS(buffer.push(stale), Error);
  CHECK_THROWS_AS(ErrorBuffer(0), Error);
}

TEST_CASE("buffer csv round trip is exact") {
  const ErrorBuffer buffer = synthetic_log(random_gain(1), 50, 2);
  std::stringstream ss;
  buffer.write_csv(ss);
  const ErrorBuffer back = ErrorBuffer::read_csv(ss);
  REQUIRE(back.size() == buffer.size());
  CHECK(back.errors() == buffer.errors());
  CHECK(back.inputs() == buffer.inputs());

  std::stringstream bad("tick,e1\n1,2,3\n");
  CHECK_THROWS_AS(ErrorBuffer::read_csv(bad), Error);
  std::stringstream empty;
  CHECK_THROWS_AS(ErrorBuffer::read_csv(empty), Error);
}

TEST_CASE("input baseline splits the weight over loaded legs") {
  Vector12 u = Vector12::Zero();
  u(2) = 80.0;
  u(11) = 120.0;
  const Vector12 b = input_baseline(u, 200.0);
  CHECK(b(2) == 100.0);
  CHECK(b(11) == 100.0);
  CHECK(b(5) == 0.0);
  CHECK(b.sum() == 200.0);
  CHECK(input_baseline(Vector12::Zero(), 200.0).isZero());
}

TEST_CASE("joint fit recovers the input gain") {
  const Matrix4x12 c = random_gain(3);
  const ErrorBuffer buffer = synthetic_log(c, 3000, 4);
  const ErrorModelFit fit = fit_error_model(buffer, 1, 0, {200.0, true});
  CHECK((fit.model.c_matrix() - c).cwiseAbs().maxCoeff() < 2e-5);
  for (int i = 0; i < 4; ++i) CHECK(fit.model.core().phi()[0](i, i) == doctest::Approx(0.7).epsilon(0.05));
  CHECK(fit.model.warm());

  const ErrorModelFit no_gain = fit_error_model(buffer, 1, 0, {200.0, false});
  CHECK(no_gain.model.c_matrix().isZero());
  CHECK_THROWS_AS(fit_error_model(synthetic_log(c, 20, 4), 2, 1, {200.0, true}), Error);
}

TEST_CASE("forecast is affine in the planned inputs") {
  const Matrix4x12 c = random_gain(5);
  const ErrorModelFit fit = fit_error_model(synthetic_log(c, 1000, 6), 2, 0, {200.0, true});
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<Vector12> a(4), b(4);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 12; ++i) {
      a[j](i) = (i % 3 == 2 ? 50.0 : 0.0) + normal(rng);
      b[j](i) = (i % 3 == 2 ? 50.0 : 0.0) + normal(rng);
    }
  }
  const auto ea = fit.model.predict_errors(a);
  const auto eb = fit.model.predict_errors(b);
  const Matrix4x12& gain = fit.model.c_matrix();
  for (int j = 0; j < 4; ++j) {
    // Same loaded set on both sides, so the baselines cancel.
    CHECK(((ea[j] - eb[j]) - gain * (a[j] - b[j])).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(fit.model.predict_errors({}), Error);
}

TEST_CASE("select matrix places attitude and height") {
  const Vector4 e(0.1, 0.2, 0.3, 0.4);
  const auto c = compensation_term({e, 2.0 * e});
  REQUIRE(c.size() == 2);
  CHECK(c[0](0) == 0.1);
  CHECK(c[0](1) == 0.2);
  CHECK(c[0](2) == 0.3);
  CHECK(c[0](5) == 0.4);
  CHECK(c[0].sum() == doctest::Approx(1.0));
  CHECK(c[1](5) == 0.8);
}

TEST_CASE("adequacy check") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd white(2000, 4);
  for (Eigen::Index i = 0; i < white.size(); ++i) white.data()[i] = normal(rng);
  const AdequacyReport ok = adequacy_check(white);
  CHECK(ok.pass);
  CHECK(ok.fraction_inside >= 0.95);
  CHECK(ok.n_samples == 2000);

  const Eigen::MatrixXd colored = simulate_armav({Eigen::Matrix4d::Identity() * 0.8}, {}, 2000, 1.0, 9);
  const AdequacyReport bad = adequacy_check(colored);
  CHECK_FALSE(bad.pass);
  CHECK(bad.fraction_inside < 0.5);

  CHECK_FALSE(adequacy_check(white.topRows(99)).pass);
  Eigen::MatrixXd dead = white;
  dead.col(2).setZero();
  const AdequacyReport zero = adequacy_check(dead);
  CHECK_FALSE(zero.pass);
  CHECK(zero.reason == "ZeroVariance");

  const InputAwareErrorModel explosive(ArmavModel({Eigen::Matrix4d::Identity() * 1.2}, {}, Vector4::Zero()),
                                       Matrix4x12::Zero(), 0.0);
  const AdequacyReport unstable = adequacy_check(explosive, white);
  CHECK_FALSE(unstable.pass);
  CHECK(unstable.reason == "AR part not stationary");
}

TEST_CASE("installed model warms from recorded samples and stays fixed") {
  const Matrix4x12 c = random_gain(10);
  const ErrorBuffer log = synthetic_log(c, 600, 11);
  const ErrorModelFit fit = fit_error_model(log, 2, 0, {200.0, true});

  OnlineErrorModelConfig cfg;
  cfg.refit_every = 0;
  cfg.supported_weight = 200.0;
  OnlineErrorModel online(cfg);
  online.install(fit.model);
  CHECK(online.active());
  const std::vector<Vector12> plan(3, log[0].u);
  CHECK_FALSE(online.forecast(plan).has_value());
  online.record(log[0]);
  CHECK_FALSE(online.forecast(plan).has_value());
  online.record(log[1]);
  REQUIRE(online.forecast(plan).has_value());
  for (std::size_t i = 2; i < 400; ++i) online.record(log[i]);
  CHECK(online.refit_count() == 0);
  CHECK(online.model()->c_matrix() == fit.model.c_matrix());
}

TEST_CASE("online refit cadence and gating") {
  const ErrorBuffer log = synthetic_log(random_gain(12), 600, 13);
  OnlineErrorModelConfig cfg;
  cfg.ar_order = 1;
  cfg.ma_order = 0;
  cfg.min_samples = 120;
  cfg.refit_every = 100;
  cfg.supported_weight = 200.0;
  OnlineErrorModel online(cfg);
  for (std::size_t i = 0; i < 119; ++i) online.record(log[i]);
  CHECK_FALSE(online.model().has_value());
  online.record(log[119]);
  CHECK(online.refit_count() == 1);
  CHECK(online.active());
  for (std::size_t i = 120; i < 220; ++i) online.record(log[i]);
  CHECK(online.refit_count() == 2);
  CHECK(online.failed_refits() == 0);
  CHECK(online.forecast({log[0].u}).has_value());

  // AR(1) data fitted as white noise would not pass; an order that fits does.
  CHECK(online.last_report().pass);
}
