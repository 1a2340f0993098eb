#include "riesub/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace riesub {

MoreauConfig MoreauConfig::defaults_for(const FiniteSumProblem& p) {
  MoreauConfig c;
  c.lambda = 1.0 / (4.0 * (p.lipschitz() + p.weak_convexity()));
  return c;
}

void MoreauConfig::validate(const FiniteSumProblem& p) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("moreau: lambda must be positive");
  const double limit = 1.0 / (2.0 * (p.lipschitz() + p.weak_convexity()));
  if (!allow_large_lambda && !(lambda < limit))
    throw ConfigError("moreau: lambda must be below 1/(2(L + tau)) = " + std::to_string(limit));
  if (inner_iterations < 1) throw ConfigError("moreau: inner budget must be positive");
  if (!(inner_beta > 0.0 && inner_beta < 1.0)) throw ConfigError("moreau: inner beta must lie in (0, 1)");
  if (restarts < 1) throw ConfigError("moreau: need at least one start");
}

double moreau_objective(const FiniteSumProblem& p, const Matrix& Y, const Matrix& X, double lambda) {
  return p.value(Y) + (Y - X).squaredNorm() / (2.0 * lambda);
}

namespace {

struct InnerRun {
  Matrix best;
  double best_value;
  double residual;
  long iterations;
};

InnerRun run_inner(const FiniteSumProblem& p, const Matrix& X, Matrix Y, const MoreauConfig& cfg,
                   double reference) {
  const double inv_lambda = 1.0 / cfg.lambda;
  const long budget = cfg.inner_iterations;
  const long window = std::max<long>(1, budget / 10);
  Matrix G;
  InnerRun run{Y, std::numeric_limits<double>::infinity(), 0.0, 0};
  const double ceiling = reference + 1.0;
  long above = 0;
  double window_start = std::numeric_limits<double>::infinity();
  double gamma = cfg.gamma0();
  for (long j = 0; j <= budget; ++j) {
    const double fy = p.value_and_subgradient(Y, G);
    const double h = fy + (Y - X).squaredNorm() * (0.5 * inv_lambda);
    if (!std::isfinite(h)) throw NumericalError("prox_point: non-finite inner objective", j);
    if (h < run.best_value) {
      run.best_value = h;
      run.best = Y;
    }
    if (j == 0) window_start = h;
    above = h > ceiling ? above + 1 : 0;
    if (above >= 100) throw NumericalError("prox_point: inner objective diverged", j);
    if (j == budget) break;
    G.noalias() += (Y - X) * inv_lambda;
    Y = polar_retraction(Y, -gamma * tangent_projection(Y, G));
    gamma *= cfg.inner_beta;
    run.iterations = j + 1;
    if ((j + 1) % window == 0) {
      run.residual = window_start - run.best_value;
      if (run.residual <= cfg.early_exit_tol) break;
      window_start = run.best_value;
    }
  }
  return run;
}

}  // namespace

ThetaEstimate prox_point(const FiniteSumProblem& p, const StiefelPoint<double>& X, const MoreauConfig& cfg,
                         Rng& rng) {
  cfg.validate(p);
  const Matrix& X0 = X.matrix();
  const double fx = p.value(X0);
  ThetaEstimate out;
  Matrix best = X0;
  double best_value = fx;
  double best_residual = 0.0;
  long total = 0;
  for (int s = 0; s < cfg.restarts; ++s) {
    Matrix start = s == 0 ? X0 : random_stiefel_matrix(X.n(), X.r(), rng);
    const double reference = std::max(fx, moreau_objective(p, start, X0, cfg.lambda));
    InnerRun run = run_inner(p, X0, std::move(start), cfg, reference);
    total += run.iterations;
    if (run.best_value < best_value) {
      best_value = run.best_value;
      best = std::move(run.best);
      best_residual = run.residual;
    }
  }
  out.prox_point = StiefelPoint<double>(best);
  out.envelope_value = best_value;
  out.theta = (best - X0).norm() / cfg.lambda;
  out.inner_residual = best_residual;
  out.inner_iterations = total;
  return out;
}

double theta_bruteforce_circle(const FiniteSumProblem& p, const StiefelPoint<double>& X, double lambda, long N) {
  if (X.n() != 2 || X.r() != 1 || p.n() != 2 || p.r() != 1)
    throw DimensionError("theta_bruteforce_circle: needs n = 2, r = 1");
  if (N < 10000) throw ConfigError("theta_bruteforce_circle: grid too coarse");
  // The grid starts at the angle of X so that X itself is a candidate.
  const double phi = std::atan2(X.matrix()(1, 0), X.matrix()(0, 0));
  Matrix Y(2, 1);
  Matrix best(2, 1);
  double best_value = std::numeric_limits<double>::infinity();
  for (long k = 0; k < N; ++k) {
    const double angle = phi + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(N);
    Y(0, 0) = std::cos(angle);
    Y(1, 0) = std::sin(angle);
    const double h = moreau_objective(p, Y, X.matrix(), lambda);
    if (h < best_value) {
      best_value = h;
      best = Y;
    }
  }
  return (best - X.matrix()).norm() / lambda;
}

}  // namespace riesub
