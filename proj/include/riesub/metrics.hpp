#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "riesub/datagen.hpp"
#include "riesub/objectives.hpp"

namespace riesub {

struct EstimatorConfig {
  int restarts = 50;
  // Projected subgradient iterations per restart, step 1/k.
  long iterations = 500;
  // Monotone refinement iterations applied to each restart's best point.
  long polish_iterations = 50;
  // Extra starting points tried before the random restarts.
  std::vector<Matrix> starts;
};

struct ConstantEstimate {
  double value = 0.0;
  std::vector<double> per_restart;
};

// (1/m1) min over unit-Frobenius D~ (d x l), l = min(d, r), of
// sum_i ||y_i^T S D~||. Local search, so the value is an upper bound.
// Restart j uses rng.split(j).
ConstantEstimate estimate_c_inlier_min(const Matrix& Y, const StiefelPoint<double>& S, Index r,
                                       const EstimatorConfig& cfg, const Rng& rng);

// (1/m2) max over unit-Frobenius B (n x r) of sum_i ||o_i^T B||; a lower
// bound on the supremum.
ConstantEstimate estimate_c_outlier_max(const Matrix& O, Index r, const EstimatorConfig& cfg, const Rng& rng);

struct SharpnessEstimates {
  double c_inlier_min = 0.0;
  double c_outlier_max = 0.0;
  std::optional<double> alpha;
  bool condition_holds = false;
  int restarts = 0;
  std::vector<double> inlier_per_restart;
  std::vector<double> outlier_per_restart;
};

// alpha = (m1 c_in / 2 - m2 c_out) / m when m2 c_out <= m1 c_in / 2.
SharpnessEstimates sharpness_alpha(double c_inlier_min, double c_outlier_max, Index m1, Index m2);

// Estimates both constants on the unshuffled blocks of a dataset.
SharpnessEstimates estimate_sharpness(const RsrDataset& ds, Index r, const EstimatorConfig& cfg, const Rng& rng);

struct HaystackBoundReport {
  Index ell = 0;
  double c_inlier = 0.0;
  double c_outlier = 0.0;
  double inlier_rhs = 0.0;
  double outlier_rhs = 0.0;
  bool inlier_holds = false;
  bool outlier_holds = false;
  double inlier_margin = 0.0;   // c_inlier - inlier_rhs
  double outlier_margin = 0.0;  // outlier_rhs - c_outlier
  bool inlier_vacuous = false;  // right-hand side <= 0
  // sqrt(lambda_max(O O^T) / m2): a certified upper bound on c_O,max.
  double outlier_certified_upper = 0.0;
};

HaystackBoundReport haystack_bound_check(const RsrDataset& ds, Index r, double c1, double c2,
                                         const EstimatorConfig& cfg, const Rng& rng);

// sum over the columns x_i of X of | max_j |x_i^T a_j| - 1 |.
double odl_error(const Matrix& X, const Matrix& A);

struct SharpnessRatio {
  double min_ratio = std::numeric_limits<double>::infinity();
  long evaluated = 0;
  long skipped = 0;
};

// min over X of (f(X) - f(B)) / dist(X, {B R}), skipping dist <= 1e-8.
// Half the samples are uniform on the manifold, half are retracted
// perturbations of random solutions with log-uniform radius in [1e-4, 1].
SharpnessRatio empirical_sharpness_ratio(const FiniteSumProblem& p, const RotationSolutionSet<double>& set,
                                         long samples, Rng& rng);
SharpnessRatio empirical_sharpness_ratio(const FiniteSumProblem& p, const RotationSolutionSet<double>& set,
                                         const std::vector<Matrix>& points);

// max over (X, Y) of f(X) + <grad_R f(X), Y - X> - ((tau + L)/2)||Y - X||^2 - f(Y),
// with L scaled by `lipschitz_scale`. Pairs mix uniform, nearby and, for
// data-driven problems, data-aligned X.
double subgradient_inequality_check(const FiniteSumProblem& p, long pairs, Rng& rng, double lipschitz_scale = 1.0);
double subgradient_inequality_violation(const FiniteSumProblem& p, const Matrix& X, const Matrix& Y,
                                        double lipschitz_scale = 1.0);

}  // namespace riesub
