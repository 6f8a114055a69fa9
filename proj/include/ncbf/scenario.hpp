#pragma once

// Scenario description (robots, controller, simulation, outputs), its JSON
// form, and pre-run validation.

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncbf/controller.hpp"
#include "ncbf/dynamics.hpp"
#include "ncbf/geometry.hpp"
#include "ncbf/min_distance.hpp"

namespace ncbf {

inline constexpr const char* kScenarioSchema = "ncbf-scenario/1";

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BodySpec {
  // circle | ellipse | superellipse | circle_intersection | polygon | halfspaces
  std::string kind = "circle";
  double radius = 1.0;
  std::vector<double> axes;                 // ellipse, superellipse
  int power = 2;                            // superellipse
  std::vector<std::vector<double>> points;  // circle_intersection centers / polygon vertices / halfspace rows
  std::vector<double> values;               // circle_intersection radii / halfspace offsets

  bool is_polytope() const { return kind == "polygon" || kind == "halfspaces"; }
  bool operator==(const BodySpec&) const = default;
};

struct RobotSpec {
  std::string name;
  BodySpec body;
  DynamicsKind dynamics = DynamicsKind::integrator;
  std::vector<double> init;  // (x1, x2, heading)
  std::vector<double> goal;
  double kp = 0.5;
  UnicycleGains clf;
  std::vector<double> input_lower;
  std::vector<double> input_upper;

  bool operator==(const RobotSpec& o) const {
    return name == o.name && body == o.body && dynamics == o.dynamics && init == o.init && goal == o.goal &&
           kp == o.kp && clf.k_rho == o.clf.k_rho && clf.k_alpha == o.clf.k_alpha && clf.k_beta == o.clf.k_beta &&
           clf.goal_tolerance == o.clf.goal_tolerance && input_lower == o.input_lower && input_upper == o.input_upper;
  }
};

struct ControllerSpec {
  double alpha = 1.0;
  double eps = kDefaultAlmostActiveEps;
  double eps1_sq = 0.1;
  double M = kRateBound;
  double enforcement_radius_sq = kInf;
  bool fast_path = true;
  FilterCost cost = FilterCost::track_nominal;

  NCBFParams params() const {
    NCBFParams p;
    p.alpha = alpha;
    p.eps = eps;
    p.eps1_sq = eps1_sq;
    p.M = M;
    p.enforcement_radius_sq = enforcement_radius_sq;
    p.fast_path = fast_path;
    p.cost = cost;
    return p;
  }
  bool operator==(const ControllerSpec&) const = default;
};

struct SimSpec {
  double dt = 0.01;
  double T = 60.0;
  std::uint64_t seed = 0;
  double goal_tolerance = 0.5;  // acceptance radius for the final positions
  bool operator==(const SimSpec&) const = default;
};

struct OutputSpec {
  std::string dir = "out";
  std::string trajectory = "trajectory.csv";
  std::string pairs = "pairs.csv";
  std::string summary = "summary.json";
  bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
  std::string name = "scenario";
  std::vector<RobotSpec> robots;
  ControllerSpec controller;
  SimSpec sim;
  OutputSpec output;

  bool operator==(const Scenario&) const = default;
};

// ---------------------------------------------------------------- bodies

inline ConvexBody build_body(const BodySpec& b) {
  const PoseMap pose = PoseMap::planar();
  auto need_axes = [&] {
    if (b.axes.size() != 2 || !(b.axes[0] > 0) || !(b.axes[1] > 0))
      throw ScenarioError(b.kind + ": axes must be two positive numbers");
  };
  if (b.kind == "circle") {
    if (!(b.radius > 0)) throw ScenarioError("circle: radius must be positive");
    return shapes::circle(b.radius, pose);
  }
  if (b.kind == "ellipse") {
    need_axes();
    return shapes::ellipse(b.axes[0], b.axes[1], pose);
  }
  if (b.kind == "superellipse") {
    need_axes();
    try {
      return shapes::superellipse(b.axes[0], b.axes[1], b.power, pose);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("superellipse: ") + e.what());
    }
  }
  if (b.kind == "circle_intersection") {
    if (b.points.empty() || b.points.size() != b.values.size())
      throw ScenarioError("circle_intersection: need one radius per center");
    std::vector<Vec> centers;
    for (const auto& c : b.points) {
      if (c.size() != 2) throw ScenarioError("circle_intersection: centers are 2D");
      centers.push_back(Eigen::Vector2d(c[0], c[1]));
    }
    try {
      return shapes::ball_intersection(centers, b.values, pose);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("circle_intersection: ") + e.what());
    }
  }
  if (b.kind == "polygon") {
    if (b.points.size() < 3) throw ScenarioError("polygon: need at least 3 vertices");
    std::vector<Vec> pts;
    for (const auto& p : b.points) {
      if (p.size() != 2) throw ScenarioError("polygon: vertices are 2D");
      pts.push_back(Eigen::Vector2d(p[0], p[1]));
    }
    return PolytopeBody::from_vertices(pts, pose);
  }
  if (b.kind == "halfspaces") {
    if (b.points.empty() || b.points.size() != b.values.size())
      throw ScenarioError("halfspaces: need one offset per row");
    Mat A(b.points.size(), 2);
    Vec c(b.points.size());
    for (std::size_t k = 0; k < b.points.size(); ++k) {
      if (b.points[k].size() != 2) throw ScenarioError("halfspaces: rows are 2D");
      A(k, 0) = b.points[k][0];
      A(k, 1) = b.points[k][1];
      c(k) = b.values[k];
    }
    return PolytopeBody(A, c, pose);
  }
  throw ScenarioError("unknown body kind '" + b.kind + "'");
}

inline Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), v.size()); }

// ---------------------------------------------------------------- JSON

namespace detail {

inline nlohmann::json num_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

template <class T>
T get_or(const nlohmann::json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const BodySpec& b) {
  nlohmann::json j{{"kind", b.kind}};
  if (b.kind == "circle") j["radius"] = b.radius;
  if (b.kind == "ellipse" || b.kind == "superellipse") j["axes"] = b.axes;
  if (b.kind == "superellipse") j["power"] = b.power;
  if (b.kind == "circle_intersection") {
    j["centers"] = b.points;
    j["radii"] = b.values;
  }
  if (b.kind == "polygon") j["vertices"] = b.points;
  if (b.kind == "halfspaces") {
    j["A"] = b.points;
    j["b"] = b.values;
  }
  return j;
}

inline BodySpec body_from_json(const nlohmann::json& j) {
  BodySpec b;
  b.kind = j.at("kind").get<std::string>();
  if (b.kind == "circle") b.radius = j.at("radius").get<double>();
  else if (b.kind == "ellipse") b.axes = j.at("axes").get<std::vector<double>>();
  else if (b.kind == "superellipse") {
    b.axes = j.at("axes").get<std::vector<double>>();
    b.power = j.at("power").get<int>();
  } else if (b.kind == "circle_intersection") {
    b.points = j.at("centers").get<std::vector<std::vector<double>>>();
    b.values = j.at("radii").get<std::vector<double>>();
  } else if (b.kind == "polygon") {
    b.points = j.at("vertices").get<std::vector<std::vector<double>>>();
  } else if (b.kind == "halfspaces") {
    b.points = j.at("A").get<std::vector<std::vector<double>>>();
    b.values = j.at("b").get<std::vector<double>>();
  } else {
    throw ScenarioError("unknown body kind '" + b.kind + "'");
  }
  return b;
}

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json robots = nlohmann::json::array();
  for (const auto& r : s.robots) {
    nlohmann::json jr{{"name", r.name},
                      {"body", to_json(r.body)},
                      {"dynamics", to_string(r.dynamics)},
                      {"init", r.init},
                      {"goal", r.goal},
                      {"input_lower", r.input_lower},
                      {"input_upper", r.input_upper}};
    if (r.dynamics == DynamicsKind::integrator) {
      jr["gains"] = {{"kp", r.kp}};
    } else {
      jr["gains"] = {{"k_rho", r.clf.k_rho},
                     {"k_alpha", r.clf.k_alpha},
                     {"k_beta", r.clf.k_beta},
                     {"goal_tolerance", r.clf.goal_tolerance}};
    }
    robots.push_back(jr);
  }
  const auto& c = s.controller;
  return {{"schema", kScenarioSchema},
          {"name", s.name},
          {"robots", robots},
          {"controller",
           {{"alpha", c.alpha},
            {"eps", c.eps},
            {"eps1_sq", c.eps1_sq},
            {"M", c.M},
            {"enforcement_radius_sq", detail::num_or_null(c.enforcement_radius_sq)},
            {"fast_path", c.fast_path},
            {"cost", c.cost == FilterCost::track_nominal ? "track_nominal" : "min_norm"}}},
          {"sim", {{"dt", s.sim.dt}, {"T", s.sim.T}, {"seed", s.sim.seed}, {"goal_tolerance", s.sim.goal_tolerance}}},
          {"output",
           {{"dir", s.output.dir},
            {"trajectory", s.output.trajectory},
            {"pairs", s.output.pairs},
            {"summary", s.output.summary}}}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    const std::string schema = j.at("schema").get<std::string>();
    if (schema != kScenarioSchema) throw ScenarioError("unsupported scenario schema '" + schema + "'");
    Scenario s;
    s.name = detail::get_or<std::string>(j, "name", s.name);
    for (const auto& jr : j.at("robots")) {
      RobotSpec r;
      r.name = detail::get_or<std::string>(jr, "name", "robot" + std::to_string(s.robots.size() + 1));
      r.body = body_from_json(jr.at("body"));
      r.dynamics = parse_dynamics_kind(jr.at("dynamics").get<std::string>());
      r.init = jr.at("init").get<std::vector<double>>();
      r.goal = jr.at("goal").get<std::vector<double>>();
      r.input_lower = jr.at("input_lower").get<std::vector<double>>();
      r.input_upper = jr.at("input_upper").get<std::vector<double>>();
      if (jr.contains("gains")) {
        const auto& g = jr.at("gains");
        r.kp = detail::get_or(g, "kp", r.kp);
        r.clf.k_rho = detail::get_or(g, "k_rho", r.clf.k_rho);
        r.clf.k_alpha = detail::get_or(g, "k_alpha", r.clf.k_alpha);
        r.clf.k_beta = detail::get_or(g, "k_beta", r.clf.k_beta);
        r.clf.goal_tolerance = detail::get_or(g, "goal_tolerance", r.clf.goal_tolerance);
      }
      s.robots.push_back(std::move(r));
    }
    if (j.contains("controller")) {
      const auto& c = j.at("controller");
      auto& o = s.controller;
      o.alpha = detail::get_or(c, "alpha", o.alpha);
      o.eps = detail::get_or(c, "eps", o.eps);
      o.eps1_sq = detail::get_or(c, "eps1_sq", o.eps1_sq);
      o.M = detail::get_or(c, "M", o.M);
      if (c.contains("enforcement_radius_sq") && !c.at("enforcement_radius_sq").is_null())
        o.enforcement_radius_sq = c.at("enforcement_radius_sq").get<double>();
      o.fast_path = detail::get_or(c, "fast_path", o.fast_path);
      const std::string cost = detail::get_or<std::string>(c, "cost", "track_nominal");
      if (cost == "track_nominal") o.cost = FilterCost::track_nominal;
      else if (cost == "min_norm") o.cost = FilterCost::min_norm;
      else throw ScenarioError("unknown cost '" + cost + "'");
    }
    if (j.contains("sim")) {
      const auto& m = j.at("sim");
      s.sim.dt = detail::get_or(m, "dt", s.sim.dt);
      s.sim.T = detail::get_or(m, "T", s.sim.T);
      s.sim.seed = detail::get_or<std::uint64_t>(m, "seed", s.sim.seed);
      s.sim.goal_tolerance = detail::get_or(m, "goal_tolerance", s.sim.goal_tolerance);
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      s.output.dir = detail::get_or<std::string>(o, "dir", s.output.dir);
      s.output.trajectory = detail::get_or<std::string>(o, "trajectory", s.output.trajectory);
      s.output.pairs = detail::get_or<std::string>(o, "pairs", s.output.pairs);
      s.output.summary = detail::get_or<std::string>(o, "summary", s.output.summary);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(std::string("parse error: ") + e.what());
  }
  return scenario_from_json(j);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file '" + path + "'");
  out << to_json(s).dump(2) << "\n";
}

// ---------------------------------------------------------------- validation

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> reasons;

  void fail(std::string r) {
    ok = false;
    reasons.push_back(std::move(r));
  }
};

inline KKTSolution pair_distance(const ConvexBody& bi, const Vec& xi, const ConvexBody& bj, const Vec& xj) {
  return min_distance(bi, xi, bj, xj);
}

inline ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport rep;
  try {
    s.controller.params().validate();
  } catch (const std::invalid_argument& e) {
    rep.fail(std::string("controller: ") + e.what());
  }
  if (!(s.sim.dt > 0)) rep.fail("sim: dt must be positive");
  if (!(s.sim.T >= 0)) rep.fail("sim: T must be nonnegative");

  std::vector<std::optional<ConvexBody>> bodies;
  int strict = 0, poly = 0;
  for (const auto& r : s.robots) {
    const std::string tag = "robot '" + r.name + "': ";
    const int m = input_dim(r.dynamics);
    if (r.init.size() != 3 || r.goal.size() != 3) rep.fail(tag + "init and goal must be (x1, x2, heading)");
    if (static_cast<int>(r.input_lower.size()) != m || static_cast<int>(r.input_upper.size()) != m) {
      rep.fail(tag + "input bounds must have " + std::to_string(m) + " entries");
    } else {
      for (int k = 0; k < m; ++k)
        if (!(r.input_lower[k] <= r.input_upper[k])) rep.fail(tag + "input bounds form an empty box");
    }
    try {
      bodies.emplace_back(build_body(r.body));
      if (r.body.is_polytope()) {
        ++poly;
        const auto& P = std::get<PolytopeBody>(*bodies.back());
        if (!P.is_bounded()) {
          rep.fail(tag + "polytope is unbounded");
        } else {
          const LicqReport licq = verify_licq_vertices(P);
          if (!licq.pass) rep.fail(tag + "LICQ fails at " + std::to_string(licq.offending_vertices.size()) + " vertices");
        }
      } else {
        ++strict;
      }
    } catch (const std::exception& e) {
      bodies.emplace_back(std::nullopt);
      rep.fail(tag + e.what());
    }
  }
  if (strict > 0 && poly > 0) rep.fail("mixed strict and polytope robots are not supported");
  if (!rep.ok) return rep;

  for (std::size_t i = 0; i < s.robots.size(); ++i)
    for (std::size_t j = i + 1; j < s.robots.size(); ++j) {
      const auto k = pair_distance(*bodies[i], to_vec(s.robots[i].init), *bodies[j], to_vec(s.robots[j].init));
      if (k.intersecting() || !(k.h > s.controller.eps1_sq))
        rep.fail("initial state unsafe: robots '" + s.robots[i].name + "' and '" + s.robots[j].name +
                 "' have h = " + std::to_string(k.h));
    }
  return rep;
}

}  // namespace ncbf
