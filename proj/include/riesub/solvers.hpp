#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "riesub/objectives.hpp"
#include "riesub/stationarity.hpp"

namespace riesub {

enum class Method { full, incremental, stochastic };
enum class ReturnRule { last, uniform_random_iterate };

// Scale of the full-method step. `mean` steps along the subgradient of the
// averaged objective f; `sum` steps along m times that, i.e. the summed
// component subgradients, so one full step is on the scale of one
// incremental epoch. Inner steps always use the component subgradient.
enum class StepUnits { mean, sum };

class StepSchedule {
 public:
  enum class Kind { constant, polynomial, geometric };

  static StepSchedule constant(double gamma);
  // gamma_k = gamma0 / sqrt(k + 1).
  static StepSchedule polynomial(double gamma0);
  // gamma_k = gamma0 * beta^k.
  static StepSchedule geometric(double gamma0, double beta);

  double at(long k) const;
  Kind kind() const { return kind_; }
  double gamma0() const { return gamma0_; }
  double beta() const { return beta_; }
  std::string describe() const;

 private:
  StepSchedule(Kind kind, double gamma0, double beta) : kind_(kind), gamma0_(gamma0), beta_(beta) {}
  Kind kind_;
  double gamma0_;
  double beta_;
};

// gamma = 1 / (m sqrt(T + 1)).
StepSchedule constant_stepsize(long T, long m);

using ErrorMetric = std::function<double(const Matrix&)>;

ErrorMetric distance_metric(const RotationSolutionSet<double>& set);
// Signed-permutation recovery error against a ground-truth dictionary.
ErrorMetric odl_error_metric(const Matrix& A);

struct SolverConfig {
  Method method = Method::full;
  long iterations = 100;
  StepSchedule schedule = StepSchedule::constant(1e-2);
  // Rng(seed).split(2) draws stochastic indices, split(3) drives Theta
  // restarts and split(4) picks the returned iterate.
  std::uint64_t seed = 0;
  ReturnRule return_rule = ReturnRule::last;
  StepUnits units = StepUnits::mean;
  // Reported in the `dist` trace column when set.
  ErrorMetric error_metric;
  // Theta is evaluated at k % theta_every == 0 when set.
  std::optional<long> theta_every;
  std::optional<MoreauConfig> moreau;
  // Checks the inner drift bound ||X_{k,i} - X_k|| <= i gamma L in every epoch.
  bool check_inner_drift = false;
  bool record_time = true;
};

struct TraceRow {
  long iter = 0;
  double fval = 0.0;
  double gamma = 0.0;
  std::optional<double> dist;
  std::optional<double> theta;
  double time_ms = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  long returned_index = 0;
  long reprojections = 0;
  double wall_ms = 0.0;
};

struct SolveResult {
  StiefelPoint<double> point;
  Trace trace;
};

SolveResult solve(const FiniteSumProblem& p, const StiefelPoint<double>& X0, const SolverConfig& cfg);

std::string trace_to_csv(const Trace& trace, bool include_time = true);

struct GeometricPlan {
  double alpha, L, tau, m, rho, dist0;
  double d_m, C_m;
  double e0;
  double gamma0_max;
  double gamma0_opt;
  double beta_min_opt;
  // True when gamma0_opt was pulled below gamma0_max.
  bool clamped = false;

  double beta_min(double gamma0) const;
};

GeometricPlan geometric_plan(double alpha, double L, double tau, long m,
                             double rho = std::numeric_limits<double>::infinity(), double dist0 = 0.0);

struct BetaSearchResult {
  double best_beta = 0.0;
  std::size_t best_index = 0;
  std::vector<double> betas;
  std::vector<double> final_errors;
  std::vector<Trace> traces;
};

// Runs one geometric schedule per beta and picks the smallest final error
// (ties go to the earlier grid entry). Runs are spread over `jobs` threads.
BetaSearchResult beta_grid_search(const FiniteSumProblem& p, const StiefelPoint<double>& X0, double gamma0,
                                  const std::vector<double>& betas, long T, const ErrorMetric& target,
                                  const SolverConfig& base = {}, int jobs = 1);

struct ThetaCheckpoint {
  long T;
  double min_theta;
};

// One run of length max(checkpoints) with Theta evaluated every
// cfg.theta_every iterates (every iterate when unset); reports the running
// minimum at each checkpoint. With a cadence above 1 the minimum is over the
// evaluated subset and therefore never below the full minimum.
std::vector<ThetaCheckpoint> min_theta_curve(const FiniteSumProblem& p, const StiefelPoint<double>& X0,
                                             SolverConfig cfg, const MoreauConfig& moreau,
                                             const std::vector<long>& checkpoints);

// Runs body(i) for i in [0, count) on `jobs` threads.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

std::string method_name(Method m);
Method parse_method(const std::string& s);
std::string units_name(StepUnits u);
StepUnits parse_units(const std::string& s);

}  // namespace riesub
