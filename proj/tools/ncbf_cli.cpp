// ncbf_cli: validate scenarios, run closed-loop simulations, run the
// verification suites, dump a step's filter QP.
//
// Exit codes: 0 ok, 1 usage/IO error, 2 validation failure, 3 safety breach,
// 4 solver failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ncbf/io.hpp"
#include "ncbf/scenario.hpp"
#include "ncbf/simulation.hpp"
#include "ncbf/verify.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kBreach = 3, kSolver = 4 };

ncbf::LogLevel parse_level(const std::string& s) {
  if (s == "quiet") return ncbf::LogLevel::quiet;
  if (s == "info") return ncbf::LogLevel::info;
  if (s == "debug") return ncbf::LogLevel::debug;
  return ncbf::LogLevel::warn;
}

bool load(const std::string& path, ncbf::Scenario& sc) {
  try {
    sc = ncbf::load_scenario(path);
    return true;
  } catch (const ncbf::ScenarioError& e) {
    std::cerr << "FAIL " << path << ": " << e.what() << "\n";
    return false;
  }
}

bool report_validation(const std::string& path, const ncbf::Scenario& sc) {
  const auto rep = ncbf::validate_scenario(sc);
  if (rep.ok) {
    std::cout << "PASS " << path << " (" << sc.robots.size() << " robots)\n";
    return true;
  }
  std::cout << "FAIL " << path << "\n";
  for (const auto& r : rep.reasons) std::cout << "  " << r << "\n";
  return false;
}

int cmd_validate(const std::string& path) {
  ncbf::Scenario sc;
  if (!load(path, sc)) return kInvalid;
  return report_validation(path, sc) ? kOk : kInvalid;
}

struct RunOptions {
  std::string path;
  double alpha = -1, dt = -1, horizon = -1;
  long long seed = -1;
  std::string out;
  bool dry_run = false;
  int workers = 0;
};

int cmd_run(const RunOptions& o) {
  ncbf::Scenario sc;
  if (!load(o.path, sc)) return kInvalid;
  if (o.alpha > 0) sc.controller.alpha = o.alpha;
  if (o.dt > 0) sc.sim.dt = o.dt;
  if (o.horizon >= 0) sc.sim.T = o.horizon;
  if (o.seed >= 0) sc.sim.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.out.empty()) sc.output.dir = o.out;
  if (!report_validation(o.path, sc)) return kInvalid;
  if (o.dry_run) return kOk;

  ncbf::event_counters().reset();
  ncbf::Simulator sim(sc, o.workers > 0 ? o.workers : ncbf::default_worker_count());
  const auto log = sim.run();
  const auto summary = ncbf::summarize(sc, log, sim.workers());
  ncbf::ArtifactPaths paths;
  try {
    paths = ncbf::write_artifacts(sc, log, summary, o.path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  std::cout << "records " << summary.num_records << ", min h " << summary.min_h << " (pair " << summary.min_h_i << ","
            << summary.min_h_j << " at t=" << summary.min_h_time << "), goals reached "
            << (summary.goals_reached ? "yes" : "no") << ", p50 step " << summary.total.p50 << " ms\n";
  std::cout << "wrote " << paths.trajectory << ", " << paths.pairs << ", " << paths.summary << "\n";
  if (summary.breach) {
    std::cerr << "safety breach at step " << summary.breach_step << "\n";
    return kBreach;
  }
  if (summary.solver_failures > 0) {
    std::cerr << summary.solver_failures << " steps with solver failures\n";
    return kSolver;
  }
  return kOk;
}

int cmd_verify(const std::string& suite, int count, unsigned seed, const std::vector<std::string>& scenarios) {
  std::vector<ncbf::verify::SuiteResult> results;
  if (suite == "duality" || suite == "all") results.push_back(ncbf::verify::duality(count > 0 ? count : 200, seed));
  if (suite == "gradients" || suite == "all") {
    results.push_back(ncbf::verify::circle_oracle(count > 0 ? count : 100, seed + 1));
    auto g = ncbf::verify::gradients(count > 0 ? count : 100, seed + 2);
    results.push_back(g.directional);
    results.push_back(g.ssosc);
    results.push_back(ncbf::verify::hdot_bound(count > 0 ? count : 100, seed + 3));
  }
  if (suite == "projection" || suite == "all") results.push_back(ncbf::verify::projection(count > 0 ? count : 50, seed + 4));
  if (suite == "safety" || suite == "all") {
    if (scenarios.empty()) {
      std::cerr << "safety suite needs --scenario\n";
      return kUsage;
    }
    for (const auto& p : scenarios) {
      ncbf::Scenario sc;
      if (!load(p, sc)) return kInvalid;
      if (!ncbf::validate_scenario(sc).ok) return kInvalid;
      auto s = ncbf::verify::safety(sc);
      results.push_back(s.safety);
      results.push_back(s.barrier);
    }
  }
  if (results.empty()) {
    std::cerr << "unknown suite '" << suite << "' (duality, gradients, projection, safety, all)\n";
    return kUsage;
  }
  bool ok = true;
  for (const auto& r : results) {
    std::cout << r.line() << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kSolver;
}

int cmd_dump_qp(const std::string& path, int step) {
  ncbf::Scenario sc;
  if (!load(path, sc)) return kInvalid;
  if (!report_validation(path, sc)) return kInvalid;
  ncbf::Simulator sim(sc, 1);
  for (int k = 0; k < step; ++k) sim.advance(sim.evaluate());
  const auto rec = sim.evaluate();
  std::cout << "# step " << rec.step << " t " << rec.t << " filter " << ncbf::to_string(rec.filter_status) << "\n";
  ncbf::write_qp_text(std::cout, sim.last_program());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonsmooth control barrier function safety filter for convex robot shapes"};
  app.require_subcommand(1);
  std::string level = "warn";
  app.add_option("--log-level", level, "quiet, warn, info or debug")->check(CLI::IsMember({"quiet", "warn", "info", "debug"}));

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse a scenario and check its invariants");
  validate->add_option("file", validate_path)->required();

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write trajectory, pair and summary files");
  run->add_option("file", run_opt.path)->required();
  run->add_option("--alpha", run_opt.alpha, "Class-K gain override");
  run->add_option("--dt", run_opt.dt, "Step size override");
  run->add_option("--T", run_opt.horizon, "Horizon override");
  run->add_option("--seed", run_opt.seed, "Seed override");
  run->add_option("--out", run_opt.out, "Output directory override");
  run->add_option("--workers", run_opt.workers, "Worker threads (default: NCBF_WORKERS or hardware)");
  run->add_flag("--dry-run", run_opt.dry_run, "Validate only");

  std::string suite;
  int count = 0;
  unsigned seed = 1;
  std::vector<std::string> scenarios;
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("suite", suite, "duality, gradients, projection, safety or all")->required();
  verify->add_option("--count", count, "Random cases (suite default if 0)");
  verify->add_option("--seed", seed, "Base seed");
  verify->add_option("--scenario", scenarios, "Scenario files for the safety suite");

  std::string dump_path;
  int dump_step = 0;
  auto* dump = app.add_subcommand("dump-qp", "Print the filter QP solved at a given step");
  dump->add_option("file", dump_path)->required();
  dump->add_option("--step", dump_step, "Step index")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  ncbf::set_log_level(parse_level(level));

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*run) return cmd_run(run_opt);
    if (*verify) return cmd_verify(suite, count, seed, scenarios);
    if (*dump) return cmd_dump_qp(dump_path, dump_step);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
