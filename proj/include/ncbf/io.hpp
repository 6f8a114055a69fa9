#pragma once

// Run artifacts: trajectory CSV (one row per record per robot), pairwise CSV
// (one row per record per pair) and the JSON run summary.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "ncbf/scenario.hpp"
#include "ncbf/simulation.hpp"

namespace ncbf {

inline constexpr const char* kSummarySchema = "ncbf-summary/1";
inline constexpr int kMaxInputs = 3;

inline const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols{"step", "t",       "robot",   "x1",  "x2",  "x3",
                                             "u_nom_1", "u_nom_2", "u_nom_3", "u_1", "u_2", "u_3",
                                             "filter_status"};
  return cols;
}

inline const std::vector<std::string>& pair_columns() {
  static const std::vector<std::string> cols{"step",    "t",         "i",      "j",
                                             "h",       "enforced",  "fast_path", "margin",
                                             "distance_status"};
  return cols;
}

namespace detail {

// Empty field for missing values (absent input components, NaN margins).
inline std::string fmt_num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_header(std::ostream& os, const std::vector<std::string>& cols) {
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << "\n";
}

}  // namespace detail

inline void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log) {
  detail::write_header(os, trajectory_columns());
  for (const auto& r : log.steps) {
    for (std::size_t a = 0; a < r.x.size(); ++a) {
      os << r.step << "," << detail::fmt_num(r.t) << "," << a;
      for (int k = 0; k < 3; ++k) os << "," << detail::fmt_num(r.x[a](k));
      for (const Vec* u : {&r.u_nom[a], &r.u[a]})
        for (int k = 0; k < kMaxInputs; ++k) os << "," << (k < u->size() ? detail::fmt_num((*u)(k)) : "");
      os << "," << to_string(r.filter_status) << "\n";
    }
  }
}

inline void write_pairs_csv(std::ostream& os, const TrajectoryLog& log) {
  detail::write_header(os, pair_columns());
  for (const auto& r : log.steps)
    for (const auto& p : r.pairs)
      os << r.step << "," << detail::fmt_num(r.t) << "," << p.i << "," << p.j << "," << detail::fmt_num(p.h) << ","
         << (p.enforced ? 1 : 0) << "," << (p.fast_path ? 1 : 0) << "," << detail::fmt_num(p.margin) << ","
         << to_string(p.distance_status) << "\n";
}

inline nlohmann::json to_json(const TimingStats& t) {
  return {{"mean", t.mean}, {"std", t.std}, {"p50", t.p50}, {"p99", t.p99}, {"max", t.max}, {"count", t.count}};
}

struct ArtifactPaths {
  std::string scenario;
  std::string trajectory;
  std::string pairs;
  std::string summary;
};

inline nlohmann::json summary_json(const Scenario& sc, const RunSummary& s, const ArtifactPaths& paths) {
  nlohmann::json robots = nlohmann::json::array();
  for (std::size_t a = 0; a < sc.robots.size(); ++a)
    robots.push_back({{"name", sc.robots[a].name},
                      {"dynamics", to_string(sc.robots[a].dynamics)},
                      {"goal_error", a < s.goal_errors.size() ? nlohmann::json(s.goal_errors[a]) : nlohmann::json(nullptr)}});
  return {
      {"schema", kSummarySchema},
      {"scenario", sc.name},
      {"artifacts",
       {{"scenario", paths.scenario},
        {"trajectory", paths.trajectory},
        {"pairs", paths.pairs},
        {"summary", paths.summary}}},
      {"controller",
       {{"alpha", sc.controller.alpha},
        {"eps", sc.controller.eps},
        {"eps1_sq", sc.controller.eps1_sq},
        {"M", sc.controller.M},
        {"enforcement_radius_sq", detail::num_or_null(sc.controller.enforcement_radius_sq)},
        {"fast_path", sc.controller.fast_path},
        {"cost", sc.controller.cost == FilterCost::track_nominal ? "track_nominal" : "min_norm"}}},
      {"sim", {{"dt", sc.sim.dt}, {"T", sc.sim.T}, {"seed", sc.sim.seed}, {"goal_tolerance", sc.sim.goal_tolerance}}},
      {"records", s.num_records},
      {"final_time", s.final_time},
      {"num_pairs", s.num_pairs},
      {"workers", s.workers},
      {"min_h", detail::num_or_null(s.min_h)},
      {"min_h_pair", {s.min_h_i, s.min_h_j}},
      {"min_h_time", s.min_h_time},
      {"breach", s.breach},
      {"breach_step", s.breach_step},
      {"solver_failures", s.solver_failures},
      {"infeasible_steps", s.infeasible_steps},
      {"branch_fallbacks", s.branch_fallbacks},
      {"tikhonov_events", s.tikhonov_events},
      {"gradient_fallbacks", s.gradient_fallbacks},
      {"barrier_min_slack", detail::num_or_null(s.barrier_min_slack)},
      {"barrier_ok", s.barrier_ok},
      {"goals_reached", s.goals_reached},
      {"robots", robots},
      {"timing_ms", {{"distance", to_json(s.distance)}, {"filter", to_json(s.filter)}, {"total", to_json(s.total)}}}};
}

/// Writes the three artifacts under sc.output.dir and returns their paths.
inline ArtifactPaths write_artifacts(const Scenario& sc, const TrajectoryLog& log, const RunSummary& s,
                                     const std::string& scenario_path) {
  namespace fs = std::filesystem;
  const fs::path dir(sc.output.dir);
  fs::create_directories(dir);
  ArtifactPaths p;
  p.scenario = scenario_path;
  p.trajectory = (dir / sc.output.trajectory).string();
  p.pairs = (dir / sc.output.pairs).string();
  p.summary = (dir / sc.output.summary).string();
  auto open = [](const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
  };
  {
    auto out = open(p.trajectory);
    write_trajectory_csv(out, log);
  }
  {
    auto out = open(p.pairs);
    write_pairs_csv(out, log);
  }
  {
    auto out = open(p.summary);
    out << summary_json(sc, s, p).dump(2) << "\n";
  }
  return p;
}

}  // namespace ncbf
