#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fns/cli.hpp"

using namespace fns;
namespace fs = std::filesystem;

namespace {

std::string write_tmp_config(const std::string& name, const std::string& body) {
  fs::create_directories("cli_tmp");
  std::string path = "cli_tmp/" + name;
  std::ofstream out(path);
  out << body;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kControlConfig = R"json({
  "grid": {"L": 1.0, "N": 32, "T": 1.0, "M": 48},
  "masks": {"omega": [0.25, 0.6], "obs": [0.45, 0.8]},
  "weights": {"lambda": 16.0, "mu": 1.5, "x0": -0.5},
  "physics": {"zeta": 0.0,
              "source": {"shape": "gaussian", "amplitude": 1.0, "center": 0.15, "width": 0.05}},
  "control": {"epsilons": [1e-2, 1e-4, 1e-6], "cg_tol": 1e-9, "cg_maxit": 600},
  "check": {"directions": 5, "taus": [1e-2, 5e-3, 2.5e-3]},
  "seed": 11,
  "output": "cli_tmp/ctrl_default"
})json";

}  // namespace

TEST_CASE("simulate: zero data produces zero series and exact file sizes") {
  std::string cfg = write_tmp_config("sim_zero.json", R"json({
    "grid": {"L": 1.0, "N": 16, "T": 1.0, "M": 16},
    "physics": {"source": {"shape": "none"}},
    "output": "cli_tmp/sim_zero"
  })json");
  RunConfig c = load_config(cfg);
  SimulateOutcome out = cmd_simulate(c, "cli_tmp/sim_zero");
  CHECK(out.max_drift == 0.0);
  CHECK(out.initial_norm == 0.0);
  CHECK(fs::file_size("cli_tmp/sim_zero/trajectory.bin") ==
        static_cast<uintmax_t>((16 + 1) * 16 * 2 * sizeof(double)));
  std::string csv = slurp("cli_tmp/sim_zero/conserved.csv");
  CHECK(csv.find("# command: simulate") != std::string::npos);
  CHECK(csv.find("t,l2_norm,relative_drift") != std::string::npos);
}

TEST_CASE("simulate: free flow conserves the norm at desk scale") {
  std::string cfg = write_tmp_config("sim_free.json", R"json({
    "grid": {"L": 1.0, "N": 128, "T": 1.0, "M": 1024},
    "physics": {"initial": {"shape": "sine", "amplitude": 1.0, "mode": 3}},
    "output": "cli_tmp/sim_free"
  })json");
  RunConfig c = load_config(cfg);
  SimulateOutcome out = cmd_simulate(c, "cli_tmp/sim_free");
  CHECK(out.max_drift <= 1e-11);
}

TEST_CASE("exit codes: validation failures return 2") {
  // malformed mask interval
  std::string bad_mask = write_tmp_config("bad_mask.json", R"json({
    "grid": {"L": 1.0, "N": 16, "T": 1.0, "M": 16},
    "masks": {"omega": [0.6, 0.2], "obs": [0.4, 0.8]},
    "output": "cli_tmp/bad"
  })json");
  CHECK(run_cli({"control", "--config", bad_mask}) == 2);

  // unknown key
  std::string unknown = write_tmp_config("unknown.json", R"json({
    "grid": {"L": 1.0, "N": 16, "T": 1.0, "M": 16, "H": 3},
    "output": "cli_tmp/bad"
  })json");
  CHECK(run_cli({"simulate", "--config", unknown}) == 2);

  // missing config file, bad usage
  CHECK(run_cli({"simulate", "--config", "cli_tmp/does_not_exist.json"}) == 2);
  CHECK(run_cli({"frobnicate", "--config", "x"}) == 2);
  CHECK(run_cli({}) == 2);

  // disjoint control and observation regions
  std::string disjoint = write_tmp_config("disjoint.json", R"json({
    "grid": {"L": 1.0, "N": 16, "T": 1.0, "M": 16},
    "masks": {"omega": [0.0, 0.3], "obs": [0.7, 1.0]},
    "physics": {"source": {"shape": "gaussian", "amplitude": 1.0, "center": 0.5, "width": 0.1}},
    "output": "cli_tmp/bad"
  })json");
  CHECK(run_cli({"control", "--config", disjoint}) == 2);
}

TEST_CASE("control command: sweep summary is monotone and files appear") {
  std::string cfg = write_tmp_config("ctrl.json", kControlConfig);
  RunConfig c = load_config(cfg);
  ControlOutcome out = cmd_control(c, "cli_tmp/ctrl");
  REQUIRE(out.results.size() == 3);
  CHECK(out.results[0].v0_norm > out.results[1].v0_norm);
  CHECK(out.results[1].v0_norm > out.results[2].v0_norm);
  for (const auto& r : out.results) {
    CHECK(r.cg_converged);
    CHECK(r.cg_iterations >= 1);
  }
  CHECK(fs::exists("cli_tmp/ctrl/control_summary.csv"));
  CHECK(fs::exists("cli_tmp/ctrl/v_profile_0.csv"));
  CHECK(fs::exists("cli_tmp/ctrl/control_2.bin"));
  CHECK(fs::exists("cli_tmp/ctrl/control_2.bin.hdr"));

  std::string csv = slurp("cli_tmp/ctrl/control_summary.csv");
  CHECK(csv.find("epsilon,cg_iterations") != std::string::npos);
}

TEST_CASE("control command: all-zero data yields a zero-control record") {
  std::string cfg = write_tmp_config("ctrl_zero.json", R"json({
    "grid": {"L": 1.0, "N": 16, "T": 0.5, "M": 16},
    "masks": {"omega": [0.25, 0.6], "obs": [0.45, 0.8]},
    "physics": {"source": {"shape": "none"}},
    "control": {"epsilons": [1e-4]},
    "output": "cli_tmp/ctrl_zero"
  })json");
  RunConfig c = load_config(cfg);
  ControlOutcome out = cmd_control(c, "cli_tmp/ctrl_zero");
  REQUIRE(out.results.size() == 1);
  CHECK(out.results[0].h_norm == 0.0);
  CHECK(out.results[0].v0_norm == 0.0);
  CHECK(out.results[0].cg_iterations == 0);
}

TEST_CASE("control command is byte-deterministic") {
  std::string cfg = write_tmp_config("ctrl_det.json", kControlConfig);
  RunConfig c = load_config(cfg);
  cmd_control(c, "cli_tmp/det_a");
  cmd_control(c, "cli_tmp/det_b");
  CHECK(slurp("cli_tmp/det_a/control_summary.csv") == slurp("cli_tmp/det_b/control_summary.csv"));
  CHECK(slurp("cli_tmp/det_a/control_2.bin") == slurp("cli_tmp/det_b/control_2.bin"));
  CHECK(slurp("cli_tmp/det_a/v_profile_1.csv") == slurp("cli_tmp/det_b/v_profile_1.csv"));
}

TEST_CASE("insensitize-check: bound holds and baseline dominates") {
  std::string cfg = write_tmp_config("check.json", kControlConfig);
  RunConfig c = load_config(cfg);
  InsensitizeCheckOutcome out = cmd_insensitize_check(c, "cli_tmp/check");
  CHECK(out.bound_ok);
  CHECK(out.max_abs_deriv <= out.v0_norm * (1.0 + 1e-10));
  CHECK(out.baseline_max_abs_deriv > out.max_abs_deriv);
  CHECK(fs::exists("cli_tmp/check/insensitivity.csv"));
  CHECK(fs::exists("cli_tmp/check/insensitivity_summary.csv"));

  // linear problem: centered differences reproduce the adjoint value exactly,
  // so every absdiff column is at roundoff scale
  std::string csv = slurp("cli_tmp/check/insensitivity.csv");
  CHECK(csv.find("direction,adjoint,baseline_adjoint") != std::string::npos);
}

TEST_CASE("carleman-scan: deterministic under a fixed seed") {
  std::string body = R"json({
    "grid": {"L": 1.0, "N": 24, "T": 1.0, "M": 32},
    "masks": {"omega": [0.3, 0.7], "obs": [0.5, 0.9]},
    "weights": {"lambda": 16.0, "mu": 1.5, "x0": -0.5},
    "scan": {"lambdas": [8.0, 16.0], "mus": [1.5], "samples": 4},
    "seed": 5,
    "output": "cli_tmp/scan_a"
  })json";
  std::string cfg = write_tmp_config("scan.json", body);
  RunConfig c = load_config(cfg);
  CarlemanScanOutcome a = cmd_carleman_scan(c, "cli_tmp/scan_a");
  cmd_carleman_scan(c, "cli_tmp/scan_b");
  CHECK(slurp("cli_tmp/scan_a/scan.csv") == slurp("cli_tmp/scan_b/scan.csv"));
  CHECK(slurp("cli_tmp/scan_a/carleman_samples.csv") ==
        slurp("cli_tmp/scan_b/carleman_samples.csv"));
  CHECK(slurp("cli_tmp/scan_a/observability.csv") == slurp("cli_tmp/scan_b/observability.csv"));
  REQUIRE(a.cells.size() == 2);
  for (const auto& cell : a.cells) CHECK(std::isfinite(cell.max_log_ratio));
  for (const auto& r : a.samples) {
    CHECK(r.lhs >= 0.0);
    CHECK(r.rhs_source >= 0.0);
    CHECK(r.rhs_obs >= 0.0);
  }

  // a different seed changes the sample table
  RunConfig c2 = c;
  c2.seed = 6;
  cmd_carleman_scan(c2, "cli_tmp/scan_c");
  CHECK(slurp("cli_tmp/scan_a/carleman_samples.csv") !=
        slurp("cli_tmp/scan_c/carleman_samples.csv"));
}

TEST_CASE("convergence command reports second order") {
  std::string cfg = write_tmp_config("conv.json", R"json({
    "grid": {"L": 1.0, "N": 16, "T": 1.0, "M": 16},
    "convergence": {"grids": [[16, 32], [32, 64], [64, 128]]},
    "output": "cli_tmp/conv"
  })json");
  RunConfig c = load_config(cfg);
  ConvergenceOutcome out = cmd_convergence(c, "cli_tmp/conv");
  REQUIRE(out.orders.size() == 2);
  for (double p : out.orders) {
    CHECK(p > 1.8);
    CHECK(p < 2.2);
  }

  // non-refining grid list is rejected at parse time
  std::string bad = write_tmp_config("conv_bad.json", R"json({
    "grid": {"L": 1.0, "N": 16, "T": 1.0, "M": 16},
    "convergence": {"grids": [[32, 64], [32, 128]]},
    "output": "cli_tmp/conv"
  })json");
  CHECK(run_cli({"convergence", "--config", bad}) == 2);
}

TEST_CASE("exit codes: numerical failures return 3") {
  // cubic term large enough that the per-step iteration cannot settle
  std::string cfg = write_tmp_config("blowup.json", R"json({
    "grid": {"L": 1.0, "N": 16, "T": 1.0, "M": 16},
    "physics": {"zeta": 1e6,
                "initial": {"shape": "sine", "amplitude": 10.0, "mode": 1}},
    "output": "cli_tmp/blowup"
  })json");
  CHECK(run_cli({"simulate", "--config", cfg}) == 3);
}

TEST_CASE("run_cli end-to-end with overrides") {
  std::string cfg = write_tmp_config("cli_e2e.json", R"json({
    "grid": {"L": 1.0, "N": 16, "T": 0.5, "M": 16},
    "physics": {"initial": {"shape": "sine", "amplitude": 0.5, "mode": 1}},
    "output": "cli_tmp/ignored"
  })json");
  CHECK(run_cli({"simulate", "--config", cfg, "--out", "cli_tmp/e2e", "--seed", "42"}) == 0);
  CHECK(fs::exists("cli_tmp/e2e/conserved.csv"));
  std::string csv = slurp("cli_tmp/e2e/conserved.csv");
  CHECK(csv.find("# seed: 42") != std::string::npos);
}
