#include "ncbf/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace ncbf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("ncbf_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RobotSpec robot(const std::string& name, BodySpec body, std::vector<double> init) {
  RobotSpec r;
  r.name = name;
  r.body = std::move(body);
  r.init = init;
  r.goal = init;
  r.input_lower = {-1, -1, -1};
  r.input_upper = {1, 1, 1};
  return r;
}

BodySpec square(double half) {
  BodySpec b;
  b.kind = "polygon";
  b.points = {{half, half}, {-half, half}, {-half, -half}, {half, -half}};
  return b;
}

bool has_reason(const ValidationReport& r, const std::string& needle) {
  for (const auto& s : r.reasons)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Scenario every_field() {
  Scenario s;
  s.name = "kitchen_sink";
  BodySpec c;
  c.kind = "circle";
  c.radius = 0.75;
  BodySpec e;
  e.kind = "ellipse";
  e.axes = {1.2, 0.6};
  BodySpec se;
  se.kind = "superellipse";
  se.axes = {2, 1};
  se.power = 6;
  BodySpec ci;
  ci.kind = "circle_intersection";
  ci.points = {{0.8, 0}, {-0.8, 0}};
  ci.values = {1.5, 1.5};
  s.robots = {robot("c", c, {0, 0, 0.1}), robot("e", e, {6, 0, -0.2}), robot("se", se, {0, 6, 3.0}),
              robot("ci", ci, {6, 6, 0})};
  s.robots[1].dynamics = DynamicsKind::unicycle;
  s.robots[1].input_lower = {-2, -1};
  s.robots[1].input_upper = {2, 1};
  s.robots[1].clf = {0.4, 1.2, -0.2, 0.01};
  s.robots[0].kp = 0.7;
  s.robots[3].goal = {-6, -6, 1};
  s.controller.alpha = 0.5;
  s.controller.eps = 2e-3;
  s.controller.eps1_sq = 0.2;
  s.controller.M = 100;
  s.controller.enforcement_radius_sq = 30;
  s.controller.fast_path = false;
  s.controller.cost = FilterCost::min_norm;
  s.sim = {0.02, 3.5, 42, 0.25};
  s.output = {"elsewhere", "t.csv", "p.csv", "s.json"};
  return s;
}

}  // namespace

TEST(ScenarioIo, RoundTripEveryField) {
  const Scenario s = every_field();
  EXPECT_EQ(scenario_from_json(to_json(s)), s);
  const auto dir = temp_dir("rt");
  save_scenario(s, (dir / "s.json").string());
  EXPECT_EQ(load_scenario((dir / "s.json").string()), s);
  fs::remove_all(dir);
}

TEST(ScenarioIo, RoundTripInfiniteRadiusAndHalfspaces) {
  Scenario s;
  BodySpec h;
  h.kind = "halfspaces";
  h.points = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  h.values = {1, 1, 1, 1};
  s.robots = {robot("a", h, {0, 0, 0}), robot("b", square(0.5), {4, 0, 0})};
  const auto j = to_json(s);
  EXPECT_TRUE(j["controller"]["enforcement_radius_sq"].is_null());
  const Scenario back = scenario_from_json(j);
  EXPECT_EQ(back, s);
  EXPECT_TRUE(std::isinf(back.controller.enforcement_radius_sq));
}

TEST(ScenarioIo, ShippedScenariosRoundTrip) {
  for (const char* name : {"strict_five.json", "polytope_five.json"}) {
    const auto s = load_scenario(std::string(NCBF_SCENARIO_DIR "/") + name);
    EXPECT_EQ(scenario_from_json(to_json(s)), s) << name;
    EXPECT_EQ(s.sim.dt, 0.01);
    EXPECT_EQ(s.sim.T, 60.0);
    EXPECT_EQ(s.controller.eps1_sq, 0.1);
  }
}

TEST(ScenarioIo, ParseErrors) {
  auto j = to_json(every_field());
  auto bad = j;
  bad["schema"] = "ncbf-scenario/0";
  EXPECT_THROW(scenario_from_json(bad), ScenarioError);
  bad = j;
  bad.erase("schema");
  EXPECT_THROW(scenario_from_json(bad), ScenarioError);
  bad = j;
  bad["robots"][0]["body"]["kind"] = "blob";
  EXPECT_THROW(scenario_from_json(bad), ScenarioError);
  bad = j;
  bad["robots"][0]["dynamics"] = "bicycle";
  EXPECT_THROW(scenario_from_json(bad), ScenarioError);
  bad = j;
  bad["robots"][0]["init"] = "origin";
  EXPECT_THROW(scenario_from_json(bad), ScenarioError);
  bad = j;
  bad["controller"]["cost"] = "cheapest";
  EXPECT_THROW(scenario_from_json(bad), ScenarioError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ScenarioError);

  const auto dir = temp_dir("parse");
  std::ofstream(dir / "broken.json") << "{ \"schema\": ";
  EXPECT_THROW(load_scenario((dir / "broken.json").string()), ScenarioError);
  fs::remove_all(dir);
}

TEST(ScenarioValidation, ShippedScenariosPass) {
  for (const char* name : {"strict_five.json", "polytope_five.json"}) {
    const auto rep = validate_scenario(load_scenario(std::string(NCBF_SCENARIO_DIR "/") + name));
    EXPECT_TRUE(rep.ok) << name << ": " << (rep.reasons.empty() ? "" : rep.reasons.front());
  }
}

TEST(ScenarioValidation, OverlappingSquaresUnsafe) {
  Scenario s;
  s.robots = {robot("a", square(1), {0, 0, 0}), robot("b", square(1), {1.5, 0, 0})};
  const auto rep = validate_scenario(s);
  EXPECT_FALSE(rep.ok);
  EXPECT_TRUE(has_reason(rep, "initial state unsafe"));
  // touching within the margin is also unsafe: gap 0.3, h = 0.09 < 0.1
  s.robots[1].init = {2.3, 0, 0};
  EXPECT_TRUE(has_reason(validate_scenario(s), "initial state unsafe"));
  s.robots[1].init = {2.4, 0, 0};
  EXPECT_TRUE(validate_scenario(s).ok);
}

TEST(ScenarioValidation, DuplicatedFaceFailsLicq) {
  BodySpec h;
  h.kind = "halfspaces";
  h.points = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 0}};
  h.values = {1, 1, 1, 1, 1};
  Scenario s;
  s.robots = {robot("dup", h, {0, 0, 0}), robot("b", square(1), {5, 0, 0})};
  const auto rep = validate_scenario(s);
  EXPECT_FALSE(rep.ok);
  EXPECT_TRUE(has_reason(rep, "LICQ"));
}

TEST(ScenarioValidation, OtherInvariants) {
  BodySpec c;
  c.kind = "circle";
  c.radius = 1;
  Scenario s;
  s.robots = {robot("c", c, {0, 0, 0}), robot("p", square(1), {5, 0, 0})};
  EXPECT_TRUE(has_reason(validate_scenario(s), "mixed"));

  s.robots = {robot("c", c, {0, 0, 0})};
  s.robots[0].input_lower = {1, -1, -1};
  s.robots[0].input_upper = {0, 1, 1};
  EXPECT_TRUE(has_reason(validate_scenario(s), "empty box"));

  s.robots = {robot("c", c, {0, 0, 0})};
  s.robots[0].dynamics = DynamicsKind::unicycle;
  EXPECT_TRUE(has_reason(validate_scenario(s), "input bounds must have 2"));

  s.robots = {robot("c", c, {0, 0})};
  EXPECT_TRUE(has_reason(validate_scenario(s), "init and goal"));

  s.robots = {robot("c", c, {0, 0, 0})};
  s.sim.dt = 0;
  EXPECT_TRUE(has_reason(validate_scenario(s), "dt"));
  s.sim.dt = 0.01;
  s.controller.alpha = -1;
  EXPECT_TRUE(has_reason(validate_scenario(s), "controller"));

  BodySpec open;
  open.kind = "halfspaces";
  open.points = {{1, 0}, {0, 1}};
  open.values = {1, 1};
  s = Scenario{};
  s.robots = {robot("open", open, {0, 0, 0})};
  EXPECT_TRUE(has_reason(validate_scenario(s), "unbounded"));
}

TEST(Artifacts, CsvSchemaAndSummary) {
  Scenario s;
  s.name = "artifacts";
  BodySpec c;
  c.kind = "circle";
  c.radius = 0.5;
  s.robots = {robot("a", c, {0, 0, 0}), robot("b", c, {3, 0, 0})};
  s.robots[0].goal = {1, 1, 0};
  s.robots[1].dynamics = DynamicsKind::unicycle;
  s.robots[1].input_lower = {-2, -1};
  s.robots[1].input_upper = {2, 1};
  s.robots[1].goal = {3, 2, 0};
  s.controller.alpha = 0.5;
  s.sim.dt = 0.05;
  s.sim.T = 0.1;
  const auto dir = temp_dir("art");
  s.output.dir = (dir / "out").string();

  Simulator sim(s, 1);
  const auto log = sim.run();
  const auto summary = summarize(s, log, 1);
  const auto paths = write_artifacts(s, log, summary, "scenario.json");

  std::ifstream traj(paths.trajectory);
  std::string line;
  std::getline(traj, line);
  EXPECT_EQ(split(line), trajectory_columns());
  int rows = 0;
  while (std::getline(traj, line)) {
    const auto cells = split(line);
    ASSERT_EQ(cells.size(), trajectory_columns().size()) << line;
    if (cells[2] == "1") EXPECT_EQ(cells[8], "") << "unicycle has no third input";
    ++rows;
  }
  EXPECT_EQ(rows, 3 * 2);

  std::ifstream pairs(paths.pairs);
  std::getline(pairs, line);
  EXPECT_EQ(split(line), pair_columns());
  rows = 0;
  while (std::getline(pairs, line)) {
    ASSERT_EQ(split(line).size(), pair_columns().size()) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 3);

  nlohmann::json j;
  std::ifstream(paths.summary) >> j;
  EXPECT_EQ(j["schema"], kSummarySchema);
  EXPECT_EQ(j["artifacts"]["scenario"], "scenario.json");
  EXPECT_EQ(j["artifacts"]["trajectory"], paths.trajectory);
  EXPECT_TRUE(fs::exists(j["artifacts"]["pairs"].get<std::string>()));
  EXPECT_DOUBLE_EQ(j["controller"]["alpha"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["controller"]["eps1_sq"].get<double>(), 0.1);
  EXPECT_TRUE(j["controller"]["enforcement_radius_sq"].is_null());
  EXPECT_EQ(j["records"], 3);
  EXPECT_EQ(j["num_pairs"], 1);
  EXPECT_DOUBLE_EQ(j["min_h"].get<double>(), summary.min_h);
  for (const char* part : {"distance", "filter", "total"})
    for (const char* f : {"mean", "std", "p50", "p99", "max"}) {
      ASSERT_TRUE(j["timing_ms"][part].contains(f)) << part << "." << f;
      EXPECT_GE(j["timing_ms"][part][f].get<double>(), 0.0);
    }
  ASSERT_EQ(j["robots"].size(), 2u);
  EXPECT_EQ(j["robots"][1]["dynamics"], "unicycle");
  fs::remove_all(dir);
}
