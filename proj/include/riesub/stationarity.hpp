#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "riesub/objectives.hpp"

namespace riesub {

struct MoreauConfig {
  double lambda = 0.0;
  long inner_iterations = 2000;
  // Inner geometric schedule; gamma0 <= 0 means lambda / 10.
  double inner_gamma0 = -1.0;
  double inner_beta = 0.99;
  // Warm start at X plus (restarts - 1) random feasible starts.
  int restarts = 3;
  double early_exit_tol = 1e-10;
  // Skip the lambda < 1/(2(L + tau)) check.
  bool allow_large_lambda = false;

  // lambda = 1/(4(L + tau)).
  static MoreauConfig defaults_for(const FiniteSumProblem& p);
  void validate(const FiniteSumProblem& p) const;
  double gamma0() const { return inner_gamma0 > 0.0 ? inner_gamma0 : lambda / 10.0; }
};

struct ThetaEstimate {
  double theta = 0.0;
  StiefelPoint<double> prox_point;
  double envelope_value = 0.0;
  double inner_residual = 0.0;
  long inner_iterations = 0;
};

// f(Y) + ||Y - X||^2 / (2 lambda).
double moreau_objective(const FiniteSumProblem& p, const Matrix& Y, const Matrix& X, double lambda);

ThetaEstimate prox_point(const FiniteSumProblem& p, const StiefelPoint<double>& X, const MoreauConfig& cfg,
                         Rng& rng);

// Grid search over the angle parameterization of St(2, 1), anchored at X.
double theta_bruteforce_circle(const FiniteSumProblem& p, const StiefelPoint<double>& X, double lambda, long N);

}  // namespace riesub
