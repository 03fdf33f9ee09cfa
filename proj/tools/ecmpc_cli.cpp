#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "ecmpc/errors.hpp"
#include "ecmpc/error_model.hpp"
#include "ecmpc/scenario.hpp"

namespace fs = std::filesystem;
using namespace ecmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitSolver = 3;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

template <typename F>
void write_with(const fs::path& path, F&& fn) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  fn(out);
}

int exit_code(const ScenarioResult& r) {
  if (r.solver_failure) return kExitSolver;
  if (r.diverged) return kExitDiverged;
  return kExitOk;
}

void print_metrics(const char* label, const ScenarioResult& r) {
  const RunMetrics& m = r.metrics;
  std::printf("%-12s mean height %.4f m  p2p %.2f mm  MAE(roll,pitch,yaw,z) %.2e %.2e %.2e %.2e%s%s\n", label,
              m.mean_height, 1e3 * m.height_p2p, m.mae(0), m.mae(1), m.mae(2), m.mae(3),
              r.diverged ? "  FELL OVER" : "", r.solver_failure ? "  SOLVER FAILURE" : "");
}

void save_run(const fs::path& dir, const std::string& suffix, const ScenarioResult& r) {
  write_with(dir / ("telemetry" + suffix + ".csv"), [&](std::ostream& o) { write_telemetry_csv(o, r.telemetry); });
  write_with(dir / ("error_log" + suffix + ".csv"), [&](std::ostream& o) { r.error_log.write_csv(o); });
  write_file(dir / ("metrics" + suffix + ".json"), metrics_json(r.metrics) + "\n");
  if (r.final_model) write_file(dir / ("model" + suffix + ".json"), armav_to_json(r.final_model->core()) + "\n");
}

std::pair<int, int> parse_order(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw CLI::ValidationError("--order", "expected auto or n,m");
  return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error-model compensated MPC simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string compensation = "off";
  std::int64_t seed = -1;
  std::string out_dir = "out";
  bool dump_qp = false;

  auto* run = app.add_subcommand("run", "Run a scenario");
  run->add_option("--scenario", scenario, "Preset name (ground_truth, wrong_mass, payload_8kg) or JSON file")
      ->required();
  run->add_option("--compensation", compensation, "on, off or both")
      ->check(CLI::IsMember({"on", "off", "both"}));
  run->add_option("--seed", seed, "Noise seed (default: the scenario's)");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--dump-qp", dump_qp, "Write every QP to qp_dump.txt");

  auto* compare = app.add_subcommand("compare", "Paired baseline/compensated runs");
  compare->add_option("--scenario", scenario, "Preset name or JSON file")->required();
  compare->add_option("--seed", seed, "Noise seed (default: the scenario's)");
  compare->add_option("--out", out_dir, "Output directory");

  std::string input;
  std::string order = "auto";
  double alpha = 0.95;
  int max_k = 4;
  double supported_weight = 23.7 * kGravity;
  bool no_input_gain = false;
  std::string model_out;
  auto* fit = app.add_subcommand("fit", "Fit an error model to an error log");
  fit->add_option("--input", input, "CSV with tick,e1..e4,u1..u12")->required()->check(CLI::ExistingFile);
  fit->add_option("--order", order, "auto or n,m");
  fit->add_option("--alpha", alpha, "F-test confidence")->check(CLI::Range(0.5, 0.9999));
  fit->add_option("--max-k", max_k, "Largest k of ARMAV(2k,2k-1) tried by auto");
  fit->add_option("--supported-weight", supported_weight, "Static support force (N) behind the input baseline");
  fit->add_flag("--no-input-gain", no_input_gain, "Force C = 0");
  fit->add_option("--model-out", model_out, "Write the fitted model as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *compare) {
      ScenarioConfig cfg = load_scenario(scenario);
      if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      write_file(dir / "scenario.json", scenario_to_json(cfg) + "\n");

      if (*compare || compensation == "both") {
        const auto start = std::chrono::steady_clock::now();
        const ComparisonReport report = paired_compare(cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        save_run(dir, "_baseline", report.baseline);
        save_run(dir, "_compensated", report.compensated);
        write_with(dir / "comparison.csv", [&](std::ostream& o) { write_comparison_csv(o, report); });
        write_file(dir / "report.json", report_json(report) + "\n");
        print_metrics("baseline", report.baseline);
        print_metrics("compensated", report.compensated);
        std::printf("vibration reduction %.1f%%  height offset reduction %.1f%%  (%.1f s)\n",
                    report.vibration_reduction, report.height_offset_reduction, wall);
        return std::max(exit_code(report.baseline), exit_code(report.compensated));
      }

      cfg.compensation = compensation == "on";
      std::unique_ptr<std::ofstream> dump;
      if (dump_qp) dump = std::make_unique<std::ofstream>(dir / "qp_dump.txt");
      const ScenarioResult r = run_scenario(cfg, dump.get());
      save_run(dir, "", r);
      print_metrics(cfg.compensation ? "compensated" : "baseline", r);
      return exit_code(r);
    }

    if (*fit) {
      std::ifstream in(input);
      const ErrorBuffer buffer = ErrorBuffer::read_csv(in);
      const ErrorModelFitOptions options{supported_weight, !no_input_gain};
      const ErrorModelFit result = order == "auto" ? fit_error_model_auto(buffer, alpha, max_k, options)
                                                   : [&] {
                                                       const auto [n, m] = parse_order(order);
                                                       return fit_error_model(buffer, n, m, options);
                                                     }();
      const AdequacyReport adequacy = adequacy_check(result.model, result.residuals);
      std::printf("ARMAV(%d,%d) on %zu samples  RSS %.6e  AR radius %.4f  MA radius %.4f\n", result.n, result.m,
                  buffer.size(), result.diagnostics.rss, result.model.core().ar_spectral_radius(),
                  result.model.core().ma_spectral_radius());
      std::printf("residual whiteness: %.1f%% of lags inside +-2/sqrt(N) -> %s%s%s\n",
                  100.0 * adequacy.fraction_inside, adequacy.pass ? "adequate" : "inadequate",
                  adequacy.reason.empty() ? "" : ": ", adequacy.reason.c_str());
      if (!model_out.empty()) write_file(model_out, armav_to_json(result.model.core()) + "\n");
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}
