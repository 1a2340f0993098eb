#include "riesub/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "riesub/io.hpp"
#include "riesub/metrics.hpp"

namespace riesub {

namespace {

enum Stream : std::uint64_t { kSampling = 2, kTheta = 3, kReturn = 4 };

constexpr long kReprojectEvery = 1000;
constexpr double kReprojectTol = 1e-9;

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(what) + " must be positive and finite");
}

}  // namespace

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

StepSchedule StepSchedule::constant(double gamma) {
  require_positive(gamma, "constant stepsize");
  return StepSchedule(Kind::constant, gamma, 1.0);
}

StepSchedule StepSchedule::polynomial(double gamma0) {
  require_positive(gamma0, "gamma0");
  return StepSchedule(Kind::polynomial, gamma0, 1.0);
}

StepSchedule StepSchedule::geometric(double gamma0, double beta) {
  require_positive(gamma0, "gamma0");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("geometric beta must lie strictly inside (0, 1)");
  return StepSchedule(Kind::geometric, gamma0, beta);
}

double StepSchedule::at(long k) const {
  switch (kind_) {
    case Kind::constant:
      return gamma0_;
    case Kind::polynomial:
      return gamma0_ / std::sqrt(static_cast<double>(k) + 1.0);
    case Kind::geometric:
      return gamma0_ * std::pow(beta_, static_cast<double>(k));
  }
  return gamma0_;
}

std::string StepSchedule::describe() const {
  switch (kind_) {
    case Kind::constant:
      return "constant(gamma=" + format_double(gamma0_) + ")";
    case Kind::polynomial:
      return "diminishing(gamma0=" + format_double(gamma0_) + ")";
    case Kind::geometric:
      return "geometric(gamma0=" + format_double(gamma0_) + ",beta=" + format_double(beta_) + ")";
  }
  return "";
}

StepSchedule constant_stepsize(long T, long m) {
  if (T < 1 || m < 1) throw ConfigError("constant_stepsize: need T >= 1 and m >= 1");
  return StepSchedule::constant(1.0 / (static_cast<double>(m) * std::sqrt(static_cast<double>(T) + 1.0)));
}

ErrorMetric distance_metric(const RotationSolutionSet<double>& set) {
  const Matrix basis = set.basis().matrix();
  return [basis](const Matrix& X) { return procrustes_distance(X, basis).distance; };
}

ErrorMetric odl_error_metric(const Matrix& A) {
  return [A](const Matrix& X) { return odl_error(X, A); };
}

std::string method_name(Method m) {
  switch (m) {
    case Method::full:
      return "full";
    case Method::incremental:
      return "incremental";
    case Method::stochastic:
      return "stochastic";
  }
  return "";
}

Method parse_method(const std::string& s) {
  if (s == "full") return Method::full;
  if (s == "incremental") return Method::incremental;
  if (s == "stochastic") return Method::stochastic;
  throw ConfigError("unknown method: " + s);
}

std::string units_name(StepUnits u) { return u == StepUnits::sum ? "sum" : "mean"; }

StepUnits parse_units(const std::string& s) {
  if (s == "mean") return StepUnits::mean;
  if (s == "sum") return StepUnits::sum;
  throw ConfigError("unknown step units: " + s);
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

namespace {

class Stepper {
 public:
  Stepper(const FiniteSumProblem& p, Matrix& X) : p_(p), X_(X) {}

  // G is the averaged Euclidean subgradient at the current iterate.
  void full_step(double gamma, const Matrix& G) {
    X_ = polar_retraction(X_, -gamma * tangent_projection(X_, G));
    count();
  }

  void component_step(Index i, double gamma) {
    if (auto t = p_.component_rank_one(i, X_)) {
      t->u *= -gamma;
      polar_retraction_rank_one(X_, t->u, t->v);
    } else {
      const Matrix G = p_.component_subgradient(i, X_);
      X_ = polar_retraction(X_, -gamma * tangent_projection(X_, G));
    }
    count();
  }

  void maybe_reproject() {
    if (feasibility_error(X_) > kReprojectTol) reproject();
  }

  long reprojections() const { return reprojections_; }

 private:
  void count() {
    if (++retractions_ % kReprojectEvery == 0) reproject();
  }
  void reproject() {
    X_ = stiefel_projection(X_);
    ++reprojections_;
  }

  const FiniteSumProblem& p_;
  Matrix& X_;
  long retractions_ = 0;
  long reprojections_ = 0;
};

}  // namespace

SolveResult solve(const FiniteSumProblem& p, const StiefelPoint<double>& X0, const SolverConfig& cfg) {
  if (cfg.iterations < 0) throw ConfigError("solve: iterations must be nonnegative");
  if (X0.n() != p.n() || X0.r() != p.r()) throw DimensionError("solve: initial point does not match problem");
  if (cfg.theta_every && *cfg.theta_every < 1) throw ConfigError("solve: theta cadence must be positive");
  const long T = cfg.iterations;
  const Index m = p.m();
  const Rng master(cfg.seed);
  Rng sampler = master.split(kSampling);
  Rng theta_rng = master.split(kTheta);
  long kbar = T;
  if (cfg.return_rule == ReturnRule::uniform_random_iterate && T >= 1) {
    Rng pick = master.split(kReturn);
    kbar = 1 + static_cast<long>(pick.uniform_index(static_cast<std::uint64_t>(T)));
  }
  std::optional<MoreauConfig> moreau = cfg.moreau;
  if (cfg.theta_every && !moreau) moreau = MoreauConfig::defaults_for(p);

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  Matrix X = X0.matrix();
  Matrix returned = X;
  Stepper stepper(p, X);
  Trace trace;
  trace.rows.reserve(static_cast<std::size_t>(T) + 1);
  const double L = p.lipschitz();
  const bool batch = cfg.method == Method::full || m == 1;
  Matrix G;

  for (long k = 0;; ++k) {
    if (!X.allFinite()) throw NumericalError("solve: non-finite iterate", k);
    stepper.maybe_reproject();
    TraceRow row;
    row.iter = k;
    row.fval = batch ? p.value_and_subgradient(X, G) : p.value(X);
    if (!std::isfinite(row.fval)) throw NumericalError("solve: non-finite objective value", k);
    row.gamma = cfg.schedule.at(k);
    if (cfg.error_metric) row.dist = cfg.error_metric(X);
    if (cfg.theta_every && k % *cfg.theta_every == 0)
      row.theta = prox_point(p, StiefelPoint<double>(X), *moreau, theta_rng).theta;
    row.time_ms = cfg.record_time ? elapsed_ms() : 0.0;
    trace.rows.push_back(row);
    if (k == kbar) returned = X;
    if (k == T) break;

    const double gamma = row.gamma;
    if (batch) {
      if (cfg.method == Method::stochastic) sampler.uniform_index(1);
      const double scale = cfg.units == StepUnits::sum ? static_cast<double>(m) : 1.0;
      stepper.full_step(gamma * scale, G);
      continue;
    }
    const Matrix anchor = cfg.check_inner_drift ? X : Matrix();
    for (Index j = 0; j < m; ++j) {
      const Index i = cfg.method == Method::incremental
                          ? j
                          : static_cast<Index>(sampler.uniform_index(static_cast<std::uint64_t>(m)));
      stepper.component_step(i, gamma);
      if (cfg.check_inner_drift) {
        const double drift = (X - anchor).norm();
        const double bound = static_cast<double>(j + 1) * gamma * L + 1e-10;
        if (drift > bound)
          throw NumericalError("solve: inner drift " + format_double(drift) + " exceeds " + format_double(bound), k);
      }
    }
  }
  trace.returned_index = kbar;
  trace.reprojections = stepper.reprojections();
  trace.wall_ms = elapsed_ms();
  return {StiefelPoint<double>(returned), std::move(trace)};
}

std::string trace_to_csv(const Trace& trace, bool include_time) {
  std::string out = "iter,fval,gamma,dist,theta,time_ms\n";
  for (const auto& r : trace.rows) {
    out += std::to_string(r.iter);
    out += ',';
    out += format_double(r.fval);
    out += ',';
    out += format_double(r.gamma);
    out += ',';
    if (r.dist) out += format_double(*r.dist);
    out += ',';
    if (r.theta) out += format_double(*r.theta);
    out += ',';
    if (include_time) out += format_double(r.time_ms);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geometric plan
// ---------------------------------------------------------------------------

double GeometricPlan::beta_min(double gamma0) const {
  const double K = L + tau;
  const double v = 1.0 + 2.0 * m * (K - alpha / e0) * gamma0 + d_m * L * L * gamma0 * gamma0 / (e0 * e0);
  return std::sqrt(std::max(0.0, v));
}

GeometricPlan geometric_plan(double alpha, double L, double tau, long m, double rho, double dist0) {
  if (!(alpha > 0.0)) throw ConfigError("geometric_plan: alpha must be positive");
  if (!(L >= alpha)) throw ConfigError("geometric_plan: need L >= alpha");
  if (!(tau >= 0.0)) throw ConfigError("geometric_plan: tau must be nonnegative");
  if (m < 1) throw ConfigError("geometric_plan: m must be positive");
  if (!(rho > 0.0)) throw ConfigError("geometric_plan: rho must be positive");
  if (!(dist0 >= 0.0)) throw ConfigError("geometric_plan: dist0 must be nonnegative");
  const double K = L + tau;
  if (dist0 >= alpha / K) throw OutOfBasinError("geometric_plan: dist0 >= alpha / (L + tau)");
  if (dist0 >= rho) throw OutOfBasinError("geometric_plan: dist0 >= rho");

  GeometricPlan g{};
  const double md = static_cast<double>(m);
  g.alpha = alpha;
  g.L = L;
  g.tau = tau;
  g.m = md;
  g.rho = rho;
  g.dist0 = dist0;
  g.d_m = 5.0 / 3.0 * md * md - md + 1.0 / 3.0;
  g.C_m = md * (md - 1.0) * (2.0 * md - 1.0) / 3.0;
  g.e0 = std::min(std::max(dist0, alpha / (2.0 * K)), rho);
  const double a = alpha - K * g.e0;
  g.gamma0_max = std::min(2.0 * md * g.e0 * a / (g.d_m * L * L), g.e0 / (2.0 * md * a));
  g.gamma0_opt = md * g.e0 * a / (g.d_m * L * L);
  if (g.gamma0_opt >= g.gamma0_max) {
    g.gamma0_opt = 0.99 * g.gamma0_max;
    g.clamped = true;
  }
  g.beta_min_opt = g.beta_min(g.gamma0_opt);
  return g;
}

// ---------------------------------------------------------------------------
// Parallel helpers
// ---------------------------------------------------------------------------

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

BetaSearchResult beta_grid_search(const FiniteSumProblem& p, const StiefelPoint<double>& X0, double gamma0,
                                  const std::vector<double>& betas, long T, const ErrorMetric& target,
                                  const SolverConfig& base, int jobs) {
  if (betas.empty()) throw ConfigError("beta_grid_search: empty grid");
  if (!target) throw ConfigError("beta_grid_search: target metric required");
  BetaSearchResult out;
  out.betas = betas;
  out.traces.resize(betas.size());
  out.final_errors.resize(betas.size());
  parallel_for(betas.size(), jobs, [&](std::size_t i) {
    SolverConfig cfg = base;
    cfg.iterations = T;
    cfg.schedule = StepSchedule::geometric(gamma0, betas[i]);
    cfg.error_metric = target;
    SolveResult res = solve(p, X0, cfg);
    out.final_errors[i] = *res.trace.rows.back().dist;
    out.traces[i] = std::move(res.trace);
  });
  for (std::size_t i = 1; i < betas.size(); ++i)
    if (out.final_errors[i] < out.final_errors[out.best_index]) out.best_index = i;
  out.best_beta = betas[out.best_index];
  return out;
}

std::vector<ThetaCheckpoint> min_theta_curve(const FiniteSumProblem& p, const StiefelPoint<double>& X0,
                                             SolverConfig cfg, const MoreauConfig& moreau,
                                             const std::vector<long>& checkpoints) {
  if (checkpoints.empty()) throw ConfigError("min_theta_curve: no checkpoints");
  for (std::size_t i = 1; i < checkpoints.size(); ++i)
    if (checkpoints[i] <= checkpoints[i - 1]) throw ConfigError("min_theta_curve: checkpoints must increase");
  if (checkpoints.front() < 0) throw ConfigError("min_theta_curve: negative checkpoint");
  cfg.iterations = checkpoints.back();
  if (!cfg.theta_every) cfg.theta_every = 1;
  cfg.moreau = moreau;
  const SolveResult res = solve(p, X0, cfg);
  std::vector<ThetaCheckpoint> out;
  double running = std::numeric_limits<double>::infinity();
  std::size_t c = 0;
  for (const auto& row : res.trace.rows) {
    if (row.theta) running = std::min(running, *row.theta);
    while (c < checkpoints.size() && checkpoints[c] == row.iter) out.push_back({checkpoints[c++], running});
  }
  return out;
}

}  // namespace riesub
