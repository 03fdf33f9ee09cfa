#include "ecmpc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ecmpc/errors.hpp"

namespace ecmpc {

using nlohmann::json;

std::vector<std::string> scenario_names() { return {"ground_truth", "wrong_mass", "payload_8kg"}; }

ScenarioConfig scenario_preset(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "ground_truth") {
    cfg.duration = 30.0;
  } else if (name == "wrong_mass") {
    cfg.duration = 30.0;
    cfg.mpc.mass = 34.7;
  } else if (name == "payload_8kg") {
    cfg.duration = 40.0;
    cfg.sim.payload.push_back({5.0, 8.0});
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + name + "'");
  }
  return cfg;
}

namespace {

// Reads optional keys and rejects unknown ones.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(std::string(key) + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) const { return j_.at(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError, where_ + ": " + msg);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <int N>
Eigen::Matrix<double, N, 1> vector_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N))
    throw Error(ErrorCode::ParseError, std::string(what) + ": expected " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

Matrix3 inertia_from(const json& j, const char* what) {
  if (j.is_array() && j.size() == 3 && j.at(0).is_number()) return vector_from<3>(j, what).asDiagonal();
  if (j.is_array() && j.size() == 3) {
    Matrix3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = vector_from<3>(j.at(static_cast<std::size_t>(r)), what).transpose();
    return m;
  }
  throw Error(ErrorCode::ParseError, std::string(what) + ": expected 3 diagonal entries or a 3x3 matrix");
}

json inertia_to(const Matrix3& m) {
  if (m.isDiagonal()) return {m(0, 0), m(1, 1), m(2, 2)};
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return rows;
}

}  // namespace

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  ScenarioConfig cfg;
  Reader top(j, "scenario");
  std::string base;
  top.get("preset", base);
  if (!base.empty()) cfg = scenario_preset(base);
  top.get("name", cfg.name);
  top.get("duration", cfg.duration);
  top.get("warmup", cfg.warmup);
  top.get("seed", cfg.seed);
  top.get("compensation", cfg.compensation);
  top.get("initial_height", cfg.initial_height);
  top.get("true_mass", cfg.sim.mass);
  top.get("model_mass", cfg.mpc.mass);
  if (top.has("true_inertia")) cfg.sim.inertia = inertia_from(top.at("true_inertia"), "true_inertia");
  if (top.has("model_inertia")) cfg.mpc.inertia = inertia_from(top.at("model_inertia"), "model_inertia");

  if (top.has("payload")) {
    cfg.sim.payload.clear();
    for (const auto& e : top.at("payload")) {
      Reader r(e, "payload");
      PayloadEvent ev;
      r.get("time", ev.time);
      r.get("mass", ev.mass);
      r.finish();
      cfg.sim.payload.push_back(ev);
    }
  }
  if (top.has("command")) {
    Reader r(top.at("command"), "command");
    r.get("height", cfg.command.height);
    r.get("roll", cfg.command.roll);
    r.get("pitch", cfg.command.pitch);
    r.get("yaw", cfg.command.yaw);
    r.finish();
  }
  if (top.has("command_profile")) {
    cfg.command_profile.clear();
    for (const auto& e : top.at("command_profile")) {
      Reader r(e, "command_profile");
      CommandSegment s;
      r.get("time", s.time);
      r.get("vx", s.vx);
      r.get("vy", s.vy);
      r.get("yaw_rate", s.yaw_rate);
      r.finish();
      cfg.command_profile.push_back(s);
    }
  }
  if (top.has("gait")) {
    Reader r(top.at("gait"), "gait");
    r.get("period", cfg.gait.period);
    r.get("duty", cfg.gait.duty);
    if (r.has("offsets")) {
      const Eigen::Vector4d o = vector_from<4>(r.at("offsets"), "gait.offsets");
      for (int i = 0; i < 4; ++i) cfg.gait.offsets[static_cast<std::size_t>(i)] = o(i);
    }
    r.finish();
  }
  if (top.has("geometry")) {
    Reader r(top.at("geometry"), "geometry");
    if (r.has("hips")) {
      const json& h = r.at("hips");
      if (!h.is_array() || h.size() != 4) r.fail("hips: expected 4 points");
      for (std::size_t i = 0; i < 4; ++i) cfg.geometry.hips[i] = vector_from<3>(h.at(i), "geometry.hips");
    }
    r.get("foothold_gain", cfg.geometry.foothold_gain);
    r.finish();
  }
  if (top.has("mpc")) {
    Reader r(top.at("mpc"), "mpc");
    r.get("horizon", cfg.mpc.horizon);
    r.get("dt", cfg.mpc.dt);
    if (r.has("state_weights")) cfg.mpc.state_weights = vector_from<13>(r.at("state_weights"), "mpc.state_weights");
    r.get("input_weight", cfg.mpc.input_weight);
    r.get("mu", cfg.mpc.mu);
    r.get("fz_min", cfg.mpc.fz_min);
    r.get("fz_max", cfg.mpc.fz_max);
    std::string mode;
    r.get("compensation_mode", mode);
    if (mode == "additive")
      cfg.mpc.compensation_mode = CompensationMode::Additive;
    else if (mode == "propagated")
      cfg.mpc.compensation_mode = CompensationMode::Propagated;
    else if (!mode.empty())
      r.fail("compensation_mode: expected \"additive\" or \"propagated\"");
    r.finish();
  }
  if (top.has("sim")) {
    Reader r(top.at("sim"), "sim");
    r.get("physics_dt", cfg.sim.physics_dt);
    r.get("fall_height", cfg.sim.fall_height);
    r.get("fall_angle", cfg.sim.fall_angle);
    r.get("force_lag", cfg.sim.force_lag);
    r.finish();
  }
  if (top.has("noise")) {
    Reader r(top.at("noise"), "noise");
    r.get("attitude", cfg.noise.attitude);
    r.get("position", cfg.noise.position);
    r.get("angular_velocity", cfg.noise.angular_velocity);
    r.get("velocity", cfg.noise.velocity);
    r.finish();
  }
  if (top.has("error_model")) {
    ErrorModelSettings& em = cfg.error_model;
    Reader r(top.at("error_model"), "error_model");
    if (r.has("order")) {
      const json& o = r.at("order");
      if (o.is_string() && o.get<std::string>() == "auto") {
        em.auto_order = true;
      } else if (o.is_array() && o.size() == 2) {
        em.auto_order = false;
        em.ar_order = o.at(0).get<int>();
        em.ma_order = o.at(1).get<int>();
      } else {
        r.fail("order: expected \"auto\" or [n, m]");
      }
    }
    r.get("alpha", em.alpha);
    r.get("max_k", em.max_k);
    r.get("capacity", em.capacity);
    r.get("refit_every", em.refit_every);
    r.get("fit_window", em.fit_window);
    r.get("min_samples", em.min_samples);
    r.get("input_gain", em.input_gain);
    r.get("adequacy_gating", em.adequacy_gating);
    std::string mode;
    r.get("mode", mode);
    if (mode == "online")
      em.mode = FitMode::Online;
    else if (mode == "prefit")
      em.mode = FitMode::Prefit;
    else if (!mode.empty())
      r.fail("mode: expected \"online\" or \"prefit\"");
    std::string ref;
    r.get("reference", ref);
    if (ref == "prediction")
      em.reference = ErrorReference::Prediction;
    else if (ref == "command")
      em.reference = ErrorReference::Command;
    else if (!ref.empty())
      r.fail("reference: expected \"prediction\" or \"command\"");
    r.finish();
  }
  top.finish();
  cfg.mpc.validate();
  if (!(cfg.duration > 0.0) || cfg.warmup < 0.0) throw Error(ErrorCode::InvalidArgument, "bad duration or warmup");
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg, int indent) {
  nlohmann::ordered_json j;
  j["name"] = cfg.name;
  j["duration"] = cfg.duration;
  j["warmup"] = cfg.warmup;
  j["seed"] = cfg.seed;
  j["compensation"] = cfg.compensation;
  j["initial_height"] = cfg.initial_height;
  j["true_mass"] = cfg.sim.mass;
  j["model_mass"] = cfg.mpc.mass;
  j["true_inertia"] = inertia_to(cfg.sim.inertia);
  j["model_inertia"] = inertia_to(cfg.mpc.inertia);
  j["payload"] = nlohmann::ordered_json::array();
  for (const auto& e : cfg.sim.payload) j["payload"].push_back({{"time", e.time}, {"mass", e.mass}});
  j["command"] = {{"height", cfg.command.height}, {"roll", cfg.command.roll}, {"pitch", cfg.command.pitch},
                  {"yaw", cfg.command.yaw}};
  j["command_profile"] = nlohmann::ordered_json::array();
  for (const auto& s : cfg.command_profile)
    j["command_profile"].push_back({{"time", s.time}, {"vx", s.vx}, {"vy", s.vy}, {"yaw_rate", s.yaw_rate}});
  j["gait"] = {{"period", cfg.gait.period}, {"duty", cfg.gait.duty}, {"offsets", cfg.gait.offsets}};
  nlohmann::ordered_json hips = nlohmann::ordered_json::array();
  for (const auto& h : cfg.geometry.hips) hips.push_back({h.x(), h.y(), h.z()});
  j["geometry"] = {{"hips", hips}, {"foothold_gain", cfg.geometry.foothold_gain}};
  std::vector<double> w(cfg.mpc.state_weights.data(), cfg.mpc.state_weights.data() + 13);
  j["mpc"] = {{"horizon", cfg.mpc.horizon}, {"dt", cfg.mpc.dt},     {"state_weights", w},
              {"input_weight", cfg.mpc.input_weight}, {"mu", cfg.mpc.mu}, {"fz_min", cfg.mpc.fz_min},
              {"fz_max", cfg.mpc.fz_max},
              {"compensation_mode", cfg.mpc.compensation_mode == CompensationMode::Propagated ? "propagated" : "additive"}};
  j["sim"] = {{"physics_dt", cfg.sim.physics_dt}, {"fall_height", cfg.sim.fall_height},
              {"fall_angle", cfg.sim.fall_angle}, {"force_lag", cfg.sim.force_lag}};
  j["noise"] = {{"attitude", cfg.noise.attitude}, {"position", cfg.noise.position},
                {"angular_velocity", cfg.noise.angular_velocity}, {"velocity", cfg.noise.velocity}};
  const ErrorModelSettings& em = cfg.error_model;
  nlohmann::ordered_json order = em.auto_order ? nlohmann::ordered_json("auto") : nlohmann::ordered_json({em.ar_order, em.ma_order});
  j["error_model"] = {{"mode", em.mode == FitMode::Prefit ? "prefit" : "online"},
                      {"order", order},
                      {"alpha", em.alpha},
                      {"max_k", em.max_k},
                      {"capacity", em.capacity},
                      {"refit_every", em.refit_every},
                      {"fit_window", em.fit_window},
                      {"min_samples", em.min_samples},
                      {"input_gain", em.input_gain},
                      {"adequacy_gating", em.adequacy_gating},
                      {"reference", em.reference == ErrorReference::Prediction ? "prediction" : "command"}};
  return j.dump(indent);
}

ScenarioConfig load_scenario(const std::string& name_or_path) {
  const auto names = scenario_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return scenario_preset(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "no preset or readable file named '" + name_or_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

namespace {

Vector4 error_channels(const Vector13& x) { return {x(0), x(1), x(2), x(5)}; }

CommandSegment command_at(const std::vector<CommandSegment>& profile, double t) {
  CommandSegment c;
  for (const auto& s : profile)
    if (s.time <= t + 1e-12) c = s;
  return c;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, std::ostream* qp_dump) {
  const double pdt = cfg.sim.physics_dt;
  const long spt = std::lround(cfg.mpc.dt / pdt);
  if (spt < 10 || std::abs(static_cast<double>(spt) * pdt - cfg.mpc.dt) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "MPC dt must be an integer multiple (>= 10) of the physics dt");
  const int n = cfg.mpc.horizon;

  MpcConfig mpc_cfg = cfg.mpc;
  mpc_cfg.compensation_enabled = cfg.compensation;
  MpcController controller(mpc_cfg);
  controller.set_dump(qp_dump);
  const GaitClock clock(cfg.gait, pdt);
  const double stance_time = static_cast<double>(clock.stance_steps()) * pdt;

  std::optional<OnlineErrorModel> error_model;
  if (cfg.compensation) {
    const ErrorModelSettings& s = cfg.error_model;
    OnlineErrorModelConfig oc;
    oc.capacity = s.capacity;
    oc.refit_every = s.refit_every;
    oc.fit_window = s.fit_window;
    oc.min_samples = s.min_samples;
    oc.auto_order = s.auto_order;
    oc.ar_order = s.ar_order;
    oc.ma_order = s.ma_order;
    oc.alpha = s.alpha;
    oc.max_k = s.max_k;
    oc.estimate_input_gain = s.input_gain;
    oc.adequacy_gating = s.adequacy_gating;
    oc.supported_weight = cfg.mpc.mass * kGravity;
    if (s.mode == FitMode::Prefit) oc.refit_every = 0;
    error_model.emplace(oc);
    if (s.mode == FitMode::Prefit) {
      const std::optional<InputAwareErrorModel> model =
          cfg.prefit_model ? cfg.prefit_model : calibrate_error_model(cfg);
      if (model) error_model->install(*model);
    }
  }

  RobotState init;
  init.p = Vector3(0.0, 0.0, cfg.initial_height);
  init.theta.z() = cfg.command.yaw;
  std::array<Vector3, 4> feet;
  for (int leg = 0; leg < 4; ++leg)
    feet[static_cast<std::size_t>(leg)] = plan_foothold(leg, init.p, init.theta.z(), Vector3::Zero(), Vector3::Zero(),
                                                         0.0, stance_time, cfg.geometry, cfg.sim.ground_height);
  SimWorld world(cfg.sim, init, feet);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector13 noise_std = Vector13::Zero();
  noise_std.segment<3>(0).setConstant(cfg.noise.attitude);
  noise_std.segment<3>(3).setConstant(cfg.noise.position);
  noise_std.segment<3>(6).setConstant(cfg.noise.angular_velocity);
  noise_std.segment<3>(9).setConstant(cfg.noise.velocity);

  ScenarioResult result;
  const auto ticks = static_cast<std::int64_t>(std::floor(cfg.duration / cfg.mpc.dt + 1e-9));
  result.telemetry.reserve(static_cast<std::size_t>(ticks));
  Vector12 applied = Vector12::Zero();
  Vector4 expected = Vector4::Zero();
  bool have_expected = false;
  double desired_yaw = cfg.command.yaw;
  std::array<Vector3, 4> planned = feet;

  for (std::int64_t tick = 0; tick < ticks; ++tick) {
    const std::int64_t s0 = tick * spt;
    const double t = world.time();
    const CommandSegment seg = command_at(cfg.command_profile, t);
    MotionCommand command = cfg.command;
    command.velocity = Vector3(seg.vx, seg.vy, 0.0);
    command.yaw_rate = seg.yaw_rate;
    command.yaw = desired_yaw;

    const Vector13 truth = world.state().to_vector();
    Vector13 measured = truth;
    for (int i = 0; i < 12; ++i)
      if (noise_std(i) > 0.0) measured(i) += noise_std(i) * normal(rng);

    if (have_expected) {
      ErrorSample sample;
      sample.e = expected - error_channels(measured);
      sample.u = applied;
      sample.tick = tick;
      result.error_log.push(sample);
      if (error_model) error_model->record(sample);
    }

    const double yaw = measured(2);
    const Vector3 pos = measured.segment<3>(3);
    const Vector3 vel = measured.segment<3>(9);
    const Vector3 v_cmd = rot_z(desired_yaw) * command.velocity;
    auto foothold = [&](int leg, std::int64_t touchdown) {
      const double lead = static_cast<double>(touchdown - s0) * pdt;
      return plan_foothold(leg, pos, yaw, vel, v_cmd, lead, stance_time, cfg.geometry, cfg.sim.ground_height);
    };

    // Legs touching down now are placed from the current measurement.
    for (int leg = 0; leg < 4; ++leg)
      if (s0 > 0 && clock.stance(leg, s0) && !clock.stance(leg, s0 - 1)) world.place_foot(leg, foothold(leg, s0));

    MpcInput in;
    in.x = measured;
    in.command = command;
    for (int k = 0; k < n; ++k) {
      const std::int64_t sk = s0 + k * spt;
      in.contacts.push_back(clock.mask(sk));
      std::array<Vector3, 4> fk;
      for (int leg = 0; leg < 4; ++leg) {
        const auto l = static_cast<std::size_t>(leg);
        const bool same_stance = clock.stance(leg, s0) && clock.next_liftoff(leg, s0) > sk;
        if (same_stance)
          fk[l] = world.feet()[l];
        else if (clock.stance(leg, sk))
          fk[l] = foothold(leg, clock.cycle_start(leg, sk));
        else
          fk[l] = foothold(leg, clock.next_touchdown(leg, sk));
      }
      in.feet.push_back(fk);
    }
    for (int leg = 0; leg < 4; ++leg)
      planned[static_cast<std::size_t>(leg)] = foothold(leg, clock.next_touchdown(leg, s0 + 1));

    const MpcOutput out = controller.tick(in, error_model ? &*error_model : nullptr);
    if (out.compensated) ++result.compensated_ticks;

    TelemetryRow row;
    row.time = t;
    row.state = truth;
    row.reference = out.reference.states.front();
    row.compensation = out.compensation;
    row.grfs = out.grfs.front();
    row.status = out.status;
    row.iterations = out.iterations;
    result.telemetry.push_back(row);

    if (out.fallback && controller.consecutive_failures() >= 2) {
      result.solver_failure = true;
      break;
    }

    applied = out.grfs.front();
    if (cfg.error_model.reference == ErrorReference::Prediction)
      expected = error_channels(out.nominal_next);
    else
      expected = Vector4(command.roll, command.pitch, desired_yaw + command.yaw_rate * cfg.mpc.dt, command.height);
    have_expected = true;

    for (long j = 0; j < spt; ++j) {
      const std::int64_t sj = s0 + j;
      const ContactMask mask = clock.mask(sj);
      for (int leg = 0; leg < 4; ++leg)
        if (j > 0 && mask[static_cast<std::size_t>(leg)] && !clock.stance(leg, sj - 1))
          world.place_foot(leg, planned[static_cast<std::size_t>(leg)]);
      Vector12 u = applied;
      for (int leg = 0; leg < 4; ++leg)
        if (!mask[static_cast<std::size_t>(leg)]) u.segment<3>(3 * leg).setZero();
      world.physics_step(u, mask);
      if (world.fell_over()) {
        result.diverged = true;
        break;
      }
    }
    desired_yaw += command.yaw_rate * cfg.mpc.dt;
    if (result.diverged) break;
  }

  if (error_model) {
    result.refits = error_model->refit_count();
    result.failed_refits = error_model->failed_refits();
    result.final_model = error_model->model();
  }
  try {
    result.metrics = compute_metrics(result.telemetry, cfg.warmup);
  } catch (const Error&) {
    result.metrics = RunMetrics{};
  }
  result.metrics.fell_over = result.diverged;
  return result;
}

std::optional<InputAwareErrorModel> calibrate_error_model(const ScenarioConfig& cfg) {
  ScenarioConfig calib = cfg;
  calib.compensation = false;
  calib.prefit_model.reset();
  calib.seed = cfg.seed + 1;
  const ScenarioResult run = run_scenario(calib);
  if (run.diverged || run.solver_failure) return std::nullopt;

  const ErrorModelSettings& s = cfg.error_model;
  ErrorBuffer window(s.capacity);
  for (std::size_t i = 0; i < run.error_log.size(); ++i)
    if (static_cast<double>(run.error_log[i].tick) * cfg.mpc.dt >= cfg.warmup) window.push(run.error_log[i]);
  const ErrorModelFitOptions options{cfg.mpc.mass * kGravity, s.input_gain};
  try {
    ErrorModelFit fit = s.auto_order ? fit_error_model_auto(window, s.alpha, s.max_k, options)
                                     : fit_error_model(window, s.ar_order, s.ma_order, options);
    if (s.adequacy_gating && !adequacy_check(fit.model, fit.residuals).pass) return std::nullopt;
    return std::move(fit.model);
  } catch (const Error&) {
    return std::nullopt;
  }
}

ComparisonReport make_report(ScenarioResult baseline, ScenarioResult compensated, double desired_height) {
  ComparisonReport r;
  r.baseline = std::move(baseline);
  r.compensated = std::move(compensated);
  const RunMetrics& b = r.baseline.metrics;
  const RunMetrics& c = r.compensated.metrics;
  if (b.n_samples == 0 || c.n_samples == 0 || r.baseline.solver_failure || r.compensated.solver_failure) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.vibration_reduction = r.height_offset_reduction = nan;
    r.mae_reduction.setConstant(nan);
    r.mse_reduction.setConstant(nan);
    return r;
  }
  r.vibration_reduction = reduction_percent(b.height_p2p, c.height_p2p);
  r.height_offset_reduction =
      reduction_percent(std::abs(b.mean_height - desired_height), std::abs(c.mean_height - desired_height));
  for (int i = 0; i < 4; ++i) {
    r.mae_reduction(i) = reduction_percent(b.mae(i), c.mae(i));
    r.mse_reduction(i) = reduction_percent(b.mse(i), c.mse(i));
  }
  return r;
}

ComparisonReport paired_compare(const ScenarioConfig& cfg) {
  ScenarioConfig off = cfg;
  off.compensation = false;
  ScenarioConfig on = cfg;
  on.compensation = true;
  auto baseline = std::async(std::launch::async, [&off] { return run_scenario(off); });
  ScenarioResult compensated = run_scenario(on);
  return make_report(baseline.get(), std::move(compensated), cfg.command.height);
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& report) {
  const auto precision = out.precision(17);
  out << "time,height_baseline,height_compensated,fz_sum_baseline,fz_sum_compensated\n";
  const auto& b = report.baseline.telemetry;
  const auto& c = report.compensated.telemetry;
  const std::size_t rows = std::max(b.size(), c.size());
  auto fz_sum = [](const TelemetryRow& r) { return r.grfs(2) + r.grfs(5) + r.grfs(8) + r.grfs(11); };
  for (std::size_t i = 0; i < rows; ++i) {
    const TelemetryRow& any = i < b.size() ? b[i] : c[i];
    out << any.time << ',';
    if (i < b.size()) out << b[i].state(5);
    out << ',';
    if (i < c.size()) out << c[i].state(5);
    out << ',';
    if (i < b.size()) out << fz_sum(b[i]);
    out << ',';
    if (i < c.size()) out << fz_sum(c[i]);
    out << '\n';
  }
  out.precision(precision);
}

std::string report_json(const ComparisonReport& report, int indent) {
  nlohmann::ordered_json j;
  j["baseline"] = nlohmann::ordered_json::parse(metrics_json(report.baseline.metrics));
  j["compensated"] = nlohmann::ordered_json::parse(metrics_json(report.compensated.metrics));
  j["vibration_reduction_percent"] = report.vibration_reduction;
  j["height_offset_reduction_percent"] = report.height_offset_reduction;
  j["mae_reduction_percent"] = {report.mae_reduction(0), report.mae_reduction(1), report.mae_reduction(2),
                                report.mae_reduction(3)};
  j["mse_reduction_percent"] = {report.mse_reduction(0), report.mse_reduction(1), report.mse_reduction(2),
                                report.mse_reduction(3)};
  auto status = [](const ScenarioResult& r) {
    return r.solver_failure ? "solver_failure" : r.diverged ? "diverged" : "ok";
  };
  j["baseline_status"] = status(report.baseline);
  j["compensated_status"] = status(report.compensated);
  j["compensated_ticks"] = report.compensated.compensated_ticks;
  j["refits"] = report.compensated.refits;
  return j.dump(indent);
}

}  // namespace ecmpc
