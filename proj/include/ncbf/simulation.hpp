#pragma once

// Sample-and-hold closed loop: nominal inputs -> safety filter -> RK4 with
// the input held over [t, t + dt]. Pairwise distance solves fan out to a
// small worker pool; the filter QP itself is solved on the calling thread.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ncbf/controller.hpp"
#include "ncbf/dynamics.hpp"
#include "ncbf/log.hpp"
#include "ncbf/min_distance.hpp"
#include "ncbf/scenario.hpp"
#include "ncbf/sensitivity.hpp"

namespace ncbf {

// ---------------------------------------------------------------- workers

class WorkerPool {
 public:
  explicit WorkerPool(int workers) {
    for (int k = 1; k < std::max(1, workers); ++k) threads_.emplace_back([this] { loop(); });
  }
  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  /// Runs fn(0..count-1); the calling thread participates. Exceptions thrown
  /// by fn must be handled inside fn.
  void parallel_for(int count, const std::function<void(int)>& fn) {
    if (threads_.empty() || count <= 1) {
      for (int k = 0; k < count; ++k) fn(k);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      job_ = &fn;
      count_ = count;
      next_ = 0;
      pending_ = static_cast<int>(threads_.size());
      ++generation_;
    }
    cv_.notify_all();
    drain(fn, count);
    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  void drain(const std::function<void(int)>& fn, int count) {
    for (int k = next_.fetch_add(1); k < count; k = next_.fetch_add(1)) fn(k);
  }

  void loop() {
    long seen = 0;
    for (;;) {
      const std::function<void(int)>* job;
      int count;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
        count = count_;
      }
      drain(*job, count);
      {
        std::lock_guard<std::mutex> lock(mu_);
        --pending_;
      }
      done_cv_.notify_one();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(int)>* job_ = nullptr;
  int count_ = 0;
  std::atomic<int> next_{0};
  int pending_ = 0;
  long generation_ = 0;
  bool stop_ = false;
};

/// Worker count from NCBF_WORKERS, else the hardware concurrency.
inline int default_worker_count() {
  if (const char* env = std::getenv("NCBF_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 256) return static_cast<int>(v);
    log_message(LogLevel::warn, std::string("ignoring invalid NCBF_WORKERS='") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------- log

struct TimingStats {
  double mean = 0, std = 0, p50 = 0, p99 = 0, max = 0;
  std::size_t count = 0;
};

/// Nearest-rank percentiles; std is the population standard deviation.
inline TimingStats timing_stats(std::vector<double> v) {
  TimingStats s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / n);
  auto rank = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * n));
    return v[std::min(v.size() - 1, k == 0 ? 0 : k - 1)];
  };
  s.p50 = rank(0.50);
  s.p99 = rank(0.99);
  s.max = v.back();
  return s;
}

struct PairRecord {
  int i = 0, j = 1;
  double h = 0.0;
  bool enforced = false;
  bool fast_path = false;
  double margin = std::numeric_limits<double>::quiet_NaN();
  DistanceStatus distance_status = DistanceStatus::ok;
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  std::vector<Vec> x;
  std::vector<Vec> u_nom;
  std::vector<Vec> u;
  std::vector<PairRecord> pairs;
  FilterStatus filter_status = FilterStatus::optimal;
  double distance_ms = 0.0;
  double filter_ms = 0.0;
  double total_ms = 0.0;
};

struct TrajectoryLog {
  std::vector<StepRecord> steps;
  bool breach = false;
  int breach_step = -1;
  int solver_failures = 0;
  int infeasible_steps = 0;
};

struct RunSummary {
  std::string scenario;
  std::size_t num_records = 0;
  double final_time = 0.0;
  double min_h = kInf;
  int min_h_i = -1, min_h_j = -1;
  double min_h_time = 0.0;
  bool breach = false;
  int breach_step = -1;
  int solver_failures = 0;
  int infeasible_steps = 0;
  long branch_fallbacks = 0;
  long tikhonov_events = 0;
  long gradient_fallbacks = 0;
  double barrier_min_slack = kInf;  // min of (h-eps1^2) - (h0-eps1^2) e^{-alpha t} + 1e-3 dt k
  bool barrier_ok = true;
  std::vector<double> goal_errors;
  bool goals_reached = true;
  int num_pairs = 0;
  int workers = 1;
  TimingStats distance, filter, total;
};

// ---------------------------------------------------------------- simulator

class Simulator {
 public:
  explicit Simulator(Scenario s, int workers = default_worker_count())
      : sc_(std::move(s)), params_(sc_.controller.params()), pool_(workers) {
    params_.hold_interval = sc_.sim.dt;
    for (const auto& r : sc_.robots) {
      bodies_.push_back(build_body(r.body));
      x_.push_back(to_vec(r.init));
    }
    const int n = static_cast<int>(sc_.robots.size());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) pair_index_.push_back({i, j});
    warm_strict_.resize(pair_index_.size());
    warm_poly_.resize(pair_index_.size());
  }

  const Scenario& scenario() const { return sc_; }
  const std::vector<Vec>& state() const { return x_; }
  double time() const { return t_; }
  int step_index() const { return k_; }
  int workers() const { return pool_.size(); }
  int num_pairs() const { return static_cast<int>(pair_index_.size()); }
  /// Program solved at the most recent evaluate() (empty when no pairs were enforced).
  const QuadProgram& last_program() const { return last_program_; }

  /// Distances, nominal inputs and filtered inputs at the current state.
  StepRecord evaluate() {
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.step = k_;
    rec.t = t_;
    rec.x = x_;
    const int n = static_cast<int>(sc_.robots.size());
    std::vector<RobotInputs> robots(n);
    for (int a = 0; a < n; ++a) {
      const auto& spec = sc_.robots[a];
      RobotInputs& r = robots[a];
      r.x = x_[a];
      r.f = drift(spec.dynamics, x_[a]);
      r.g = input_matrix(spec.dynamics, x_[a]);
      r.u_lower = to_vec(spec.input_lower);
      r.u_upper = to_vec(spec.input_upper);
      r.u_nom = spec.dynamics == DynamicsKind::integrator
                    ? nominal_proportional(x_[a], to_vec(spec.goal), spec.kp, r.u_lower, r.u_upper)
                    : nominal_unicycle_clf(x_[a], to_vec(spec.goal), spec.clf, r.u_lower, r.u_upper);
      rec.u_nom.push_back(r.u_nom);
    }

    // pairwise solves
    const int P = num_pairs();
    std::vector<KKTSolution> kkt(P);
    std::vector<std::optional<StrictPairData>> strict(P);
    std::vector<std::optional<PolytopePairData>> poly(P);
    std::vector<char> failed(P, 0);
    pool_.parallel_for(P, [&](int q) {
      const auto [i, j] = pair_index_[q];
      try {
        if (const auto* si = std::get_if<StrictConvexBody>(&bodies_[i])) {
          const auto& sj = std::get<StrictConvexBody>(bodies_[j]);
          const KKTSolution* w = warm_strict_[q] ? &*warm_strict_[q] : nullptr;
          kkt[q] = min_dist_strict(*si, x_[i], sj, x_[j], w);
          if (kkt[q].ok()) warm_strict_[q] = kkt[q];
          if (kkt[q].ok() && kkt[q].h <= params_.enforcement_radius_sq) {
            StrictPairData d;
            d.a = i;
            d.b = j;
            d.kkt = kkt[q];
            d.sys = assemble_qv(*si, x_[i], sj, x_[j], kkt[q]);
            strict[q] = std::move(d);
          }
        } else {
          const auto& pi = std::get<PolytopeBody>(bodies_[i]);
          const auto& pj = std::get<PolytopeBody>(bodies_[j]);
          PolytopePairData d;
          d.a = i;
          d.b = j;
          d.ha = pi.at_state(x_[i]);
          d.hb = pj.at_state(x_[j]);
          kkt[q] = min_dist_polytope_dual(d.ha, d.hb, &warm_poly_[q]);
          if (kkt[q].ok() && kkt[q].h <= params_.enforcement_radius_sq) {
            d.kkt = kkt[q];
            d.ra = pi.rates(x_[i], robots[i].f, robots[i].g);
            d.rb = pj.rates(x_[j], robots[j].f, robots[j].g);
            poly[q] = std::move(d);
          }
        }
        if (kkt[q].status == DistanceStatus::max_iter) failed[q] = 1;
      } catch (const std::exception& e) {
        failed[q] = 1;
        log_message(LogLevel::warn, "pair (" + std::to_string(i) + "," + std::to_string(j) + ") distance failed: " + e.what());
      }
    });
    const auto t1 = std::chrono::steady_clock::now();

    std::vector<StrictPairData> strict_pairs;
    std::vector<PolytopePairData> poly_pairs;
    std::vector<int> enforced;  // pair index per block
    bool any_failed = false;
    for (int q = 0; q < P; ++q) {
      any_failed = any_failed || failed[q];
      if (strict[q]) {
        strict_pairs.push_back(std::move(*strict[q]));
        enforced.push_back(q);
      } else if (poly[q]) {
        poly_pairs.push_back(std::move(*poly[q]));
        enforced.push_back(q);
      }
    }

    SafetyFilterResult res;
    if (any_failed) {
      res = detail::fallback_zero(robots, SolveStatus::max_iter);
    } else if (!poly_pairs.empty()) {
      res = filter_polytope(robots, poly_pairs, params_, &filter_warm_);
    } else {
      res = filter_strict(robots, strict_pairs, params_, &filter_warm_);
    }
    last_program_ = res.program;
    const auto t2 = std::chrono::steady_clock::now();

    rec.u = res.u_per_robot;
    rec.filter_status = res.status;
    for (int q = 0; q < P; ++q) {
      PairRecord pr;
      pr.i = pair_index_[q].first;
      pr.j = pair_index_[q].second;
      pr.h = kkt[q].h;
      pr.distance_status = failed[q] ? DistanceStatus::max_iter : kkt[q].status;
      rec.pairs.push_back(pr);
    }
    for (std::size_t b = 0; b < enforced.size(); ++b) {
      PairRecord& pr = rec.pairs[enforced[b]];
      pr.enforced = true;
      if (b < res.pairs.size()) {
        pr.margin = res.pairs[b].margin;
        pr.fast_path = res.pairs[b].fast_path;
      }
    }
    rec.distance_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    rec.filter_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    rec.total_ms = std::chrono::duration<double, std::milli>(t2 - t0).count();
    return rec;
  }

  /// Holds rec.u over one step.
  void advance(const StepRecord& rec) {
    const double dt = sc_.sim.dt;
    for (std::size_t a = 0; a < x_.size(); ++a) x_[a] = rk4_step(sc_.robots[a].dynamics, x_[a], rec.u[a], dt);
    ++k_;
    t_ = k_ * dt;
  }

  /// Evaluates N + 1 records (N = round(T / dt)) and integrates N times.
  /// Stops at the first record with h < eps1^2.
  TrajectoryLog run() {
    TrajectoryLog log;
    if (sc_.robots.empty()) return log;
    const int N = static_cast<int>(std::llround(sc_.sim.T / sc_.sim.dt));
    for (int k = 0; k <= N; ++k) {
      StepRecord rec = evaluate();
      if (rec.filter_status == FilterStatus::infeasible_fallback) ++log.infeasible_steps;
      if (rec.filter_status == FilterStatus::solver_failure) ++log.solver_failures;
      bool breach = false;
      for (const auto& p : rec.pairs) breach = breach || p.h < params_.eps1_sq;
      log.steps.push_back(std::move(rec));
      if (breach) {
        log.breach = true;
        log.breach_step = k;
        log_message(LogLevel::warn, "safety breach at step " + std::to_string(k));
        break;
      }
      if (k < N) advance(log.steps.back());
    }
    return log;
  }

 private:
  Scenario sc_;
  NCBFParams params_;
  WorkerPool pool_;
  std::vector<ConvexBody> bodies_;
  std::vector<Vec> x_;
  std::vector<std::pair<int, int>> pair_index_;
  std::vector<std::optional<KKTSolution>> warm_strict_;
  std::vector<QpSolver> warm_poly_;
  QpSolver filter_warm_;
  QuadProgram last_program_;
  double t_ = 0.0;
  int k_ = 0;
};

inline RunSummary summarize(const Scenario& sc, const TrajectoryLog& log, int workers = 1) {
  RunSummary s;
  s.scenario = sc.name;
  s.num_records = log.steps.size();
  s.breach = log.breach;
  s.breach_step = log.breach_step;
  s.solver_failures = log.solver_failures;
  s.infeasible_steps = log.infeasible_steps;
  s.workers = workers;
  const auto& ev = event_counters();
  s.branch_fallbacks = ev.branch_fallback.load();
  s.tikhonov_events = ev.tikhonov.load();
  s.gradient_fallbacks = ev.gradient_fallback.load();
  const int n = static_cast<int>(sc.robots.size());
  s.num_pairs = n * (n - 1) / 2;
  if (log.steps.empty()) {
    s.goals_reached = n == 0;
    return s;
  }
  const double alpha = sc.controller.alpha, e1 = sc.controller.eps1_sq, dt = sc.sim.dt;
  const auto& first = log.steps.front();
  std::vector<double> dist, filt, tot;
  for (const auto& r : log.steps) {
    dist.push_back(r.distance_ms);
    filt.push_back(r.filter_ms);
    tot.push_back(r.total_ms);
    for (std::size_t q = 0; q < r.pairs.size(); ++q) {
      const auto& p = r.pairs[q];
      if (p.h < s.min_h) {
        s.min_h = p.h;
        s.min_h_i = p.i;
        s.min_h_j = p.j;
        s.min_h_time = r.t;
      }
      const double bound = (first.pairs[q].h - e1) * std::exp(-alpha * r.t) - 1e-3 * dt * r.step;
      s.barrier_min_slack = std::min(s.barrier_min_slack, (p.h - e1) - bound);
    }
  }
  s.barrier_ok = s.barrier_min_slack >= 0.0;
  s.final_time = log.steps.back().t;
  for (int a = 0; a < n; ++a) {
    const Vec& x = log.steps.back().x[a];
    const double err = (x.head(2) - to_vec(sc.robots[a].goal).head(2)).norm();
    s.goal_errors.push_back(err);
    s.goals_reached = s.goals_reached && err <= sc.sim.goal_tolerance;
  }
  s.distance = timing_stats(dist);
  s.filter = timing_stats(filt);
  s.total = timing_stats(tot);
  return s;
}

}  // namespace ncbf
