#include "riesub/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace riesub {

namespace {

constexpr double kWeightFloor = 1e-12;

// Mean row norm of V and the matching row-normalized weights.
double mean_row_norm(Matrix& V) {
  double sum = 0.0;
  for (Index i = 0; i < V.rows(); ++i) {
    const double nv = V.row(i).norm();
    sum += nv;
    if (nv > 0.0)
      V.row(i) /= nv;
    else
      V.row(i).setZero();
  }
  return sum / static_cast<double>(V.rows());
}

double objective(const Matrix& C, const Matrix& D) {
  return (C.transpose() * D).rowwise().norm().mean();
}

bool normalize_in_place(Matrix& D) {
  const double nd = D.norm();
  if (!(nd > 0.0) || !std::isfinite(nd)) return false;
  D /= nd;
  return true;
}

// One restart of the min problem over unit-Frobenius D (d x l) for the data
// C (d x m): projected subgradient with step 1/k, then majorize-minimize
// (IRLS), whose minimizers are rank one.
double minimize_from(const Matrix& C, Matrix D, const EstimatorConfig& cfg) {
  normalize_in_place(D);
  double best = objective(C, D);
  Matrix best_D = D;
  for (long k = 1; k <= cfg.iterations; ++k) {
    Matrix W = C.transpose() * D;
    mean_row_norm(W);
    Matrix next = D - (C * W) / (static_cast<double>(C.cols()) * static_cast<double>(k));
    if (!normalize_in_place(next)) break;
    D = std::move(next);
    const double v = objective(C, D);
    if (v < best) {
      best = v;
      best_D = D;
    }
  }
  D = best_D;
  for (long t = 0; t < cfg.polish_iterations; ++t) {
    const Vector w = (C.transpose() * D).rowwise().norm();
    const double scale = std::max(w.maxCoeff(), 1.0);
    const Vector inv = w.unaryExpr([scale](double x) { return 1.0 / std::max(x, kWeightFloor * scale); });
    const Matrix M = C * inv.asDiagonal() * C.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    const Vector u = es.eigenvectors().col(0);
    Vector e = D.transpose() * u;
    if (!(e.norm() > 1e-14)) e = Vector::Unit(D.cols(), 0);
    e.normalize();
    D = u * e.transpose();
    const double v = objective(C, D);
    if (v < best) best = v;
  }
  return best;
}

// Max problem over unit-Frobenius B (n x r): projected ascent with step 1/k,
// then the fixed point B <- G / ||G||, which never decreases the objective.
double maximize_from(const Matrix& O, Matrix B, const EstimatorConfig& cfg) {
  normalize_in_place(B);
  double best = objective(O, B);
  Matrix best_B = B;
  for (long k = 1; k <= cfg.iterations; ++k) {
    Matrix W = O.transpose() * B;
    mean_row_norm(W);
    Matrix next = B + (O * W) / (static_cast<double>(O.cols()) * static_cast<double>(k));
    if (!normalize_in_place(next)) break;
    B = std::move(next);
    const double v = objective(O, B);
    if (v > best) {
      best = v;
      best_B = B;
    }
  }
  B = best_B;
  for (long t = 0; t < cfg.polish_iterations; ++t) {
    Matrix W = O.transpose() * B;
    mean_row_norm(W);
    Matrix next = O * W;
    if (!normalize_in_place(next)) break;
    B = std::move(next);
    best = std::max(best, objective(O, B));
  }
  return best;
}

void check_estimator(const EstimatorConfig& cfg) {
  if (cfg.restarts < 0 || (cfg.restarts == 0 && cfg.starts.empty()))
    throw ConfigError("estimator: need at least one start");
  if (cfg.iterations < 0 || cfg.polish_iterations < 0) throw ConfigError("estimator: negative iteration count");
}

}  // namespace

ConstantEstimate estimate_c_inlier_min(const Matrix& Y, const StiefelPoint<double>& S, Index r,
                                       const EstimatorConfig& cfg, const Rng& rng) {
  check_estimator(cfg);
  if (Y.cols() < 1) throw ConfigError("estimate_c_inlier_min: no inliers");
  if (Y.rows() != S.n()) throw DimensionError("estimate_c_inlier_min: Y and S disagree on n");
  const Index d = S.r();
  const Index ell = std::min(d, r);
  const Matrix C = S.matrix().transpose() * Y;
  ConstantEstimate out;
  for (const Matrix& start : cfg.starts) {
    if (start.rows() != d || start.cols() != ell) throw DimensionError("estimate_c_inlier_min: bad start shape");
    out.per_restart.push_back(minimize_from(C, start, cfg));
  }
  for (int j = 0; j < cfg.restarts; ++j) {
    Rng stream = rng.split(static_cast<std::uint64_t>(j));
    out.per_restart.push_back(minimize_from(C, gaussian_matrix(d, ell, stream), cfg));
  }
  out.value = *std::min_element(out.per_restart.begin(), out.per_restart.end());
  return out;
}

ConstantEstimate estimate_c_outlier_max(const Matrix& O, Index r, const EstimatorConfig& cfg, const Rng& rng) {
  check_estimator(cfg);
  if (O.cols() < 1) throw ConfigError("estimate_c_outlier_max: no outliers");
  if (r < 1) throw ConfigError("estimate_c_outlier_max: r must be positive");
  ConstantEstimate out;
  for (const Matrix& start : cfg.starts) {
    if (start.rows() != O.rows() || start.cols() != r) throw DimensionError("estimate_c_outlier_max: bad start shape");
    out.per_restart.push_back(maximize_from(O, start, cfg));
  }
  for (int j = 0; j < cfg.restarts; ++j) {
    Rng stream = rng.split(static_cast<std::uint64_t>(j));
    out.per_restart.push_back(maximize_from(O, gaussian_matrix(O.rows(), r, stream), cfg));
  }
  out.value = *std::max_element(out.per_restart.begin(), out.per_restart.end());
  return out;
}

SharpnessEstimates sharpness_alpha(double c_inlier_min, double c_outlier_max, Index m1, Index m2) {
  if (m1 < 0 || m2 < 0 || m1 + m2 < 1) throw ConfigError("sharpness_alpha: bad counts");
  SharpnessEstimates s;
  s.c_inlier_min = c_inlier_min;
  s.c_outlier_max = m2 == 0 ? 0.0 : c_outlier_max;
  const double good = 0.5 * static_cast<double>(m1) * s.c_inlier_min;
  const double bad = static_cast<double>(m2) * s.c_outlier_max;
  s.condition_holds = bad <= good;
  if (s.condition_holds) s.alpha = (good - bad) / static_cast<double>(m1 + m2);
  return s;
}

SharpnessEstimates estimate_sharpness(const RsrDataset& ds, Index r, const EstimatorConfig& cfg, const Rng& rng) {
  const ConstantEstimate in = estimate_c_inlier_min(ds.inliers(), ds.S, r, cfg, rng.split(0));
  ConstantEstimate out;
  if (ds.m2 > 0) out = estimate_c_outlier_max(ds.outliers(), r, cfg, rng.split(1));
  SharpnessEstimates s = sharpness_alpha(in.value, out.value, ds.m1, ds.m2);
  s.restarts = cfg.restarts;
  s.inlier_per_restart = in.per_restart;
  s.outlier_per_restart = out.per_restart;
  return s;
}

HaystackBoundReport haystack_bound_check(const RsrDataset& ds, Index r, double c1, double c2,
                                         const EstimatorConfig& cfg, const Rng& rng) {
  if (ds.m1 < 1 || ds.m2 < 1) throw ConfigError("haystack_bound_check: needs inliers and outliers");
  HaystackBoundReport rep;
  const double n = static_cast<double>(ds.n());
  const double d = static_cast<double>(ds.d());
  const double m1 = static_cast<double>(ds.m1);
  const double m2 = static_cast<double>(ds.m2);
  rep.ell = std::min(ds.d(), r);
  rep.inlier_rhs = std::sqrt(2.0 / (d * std::numbers::pi)) - std::sqrt(8.0 * static_cast<double>(rep.ell) / m1) -
                   c1 / std::sqrt(m1);
  rep.outlier_rhs = 1.0 / std::sqrt(n) + std::sqrt(8.0 * static_cast<double>(r) / m2) + c2 / std::sqrt(m2);
  rep.inlier_vacuous = rep.inlier_rhs <= 0.0;
  const Matrix O = ds.outliers();
  rep.c_inlier = estimate_c_inlier_min(ds.inliers(), ds.S, r, cfg, rng.split(0)).value;
  rep.c_outlier = estimate_c_outlier_max(O, r, cfg, rng.split(1)).value;
  rep.inlier_margin = rep.c_inlier - rep.inlier_rhs;
  rep.outlier_margin = rep.outlier_rhs - rep.c_outlier;
  rep.inlier_holds = rep.inlier_margin >= 0.0;
  rep.outlier_holds = rep.outlier_margin >= 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(O * O.transpose(), Eigen::EigenvaluesOnly);
  rep.outlier_certified_upper = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()) / m2);
  return rep;
}

double odl_error(const Matrix& X, const Matrix& A) {
  if (A.rows() != A.cols() || X.rows() != A.rows())
    throw DimensionError("odl_error: needs a square A and X with matching rows");
  const Matrix M = X.transpose() * A;
  double err = 0.0;
  for (Index i = 0; i < M.rows(); ++i) err += std::abs(M.row(i).cwiseAbs().maxCoeff() - 1.0);
  return err;
}

SharpnessRatio empirical_sharpness_ratio(const FiniteSumProblem& p, const RotationSolutionSet<double>& set,
                                         const std::vector<Matrix>& points) {
  const Matrix& B = set.basis().matrix();
  const double f_ref = p.value(B);
  SharpnessRatio out;
  for (const Matrix& X : points) {
    const double dist = procrustes_distance(X, B).distance;
    if (dist <= 1e-8) {
      ++out.skipped;
      continue;
    }
    out.min_ratio = std::min(out.min_ratio, (p.value(X) - f_ref) / dist);
    ++out.evaluated;
  }
  return out;
}

SharpnessRatio empirical_sharpness_ratio(const FiniteSumProblem& p, const RotationSolutionSet<double>& set,
                                         long samples, Rng& rng) {
  if (samples < 1) throw ConfigError("empirical_sharpness_ratio: samples must be positive");
  const Matrix& B = set.basis().matrix();
  const Index n = B.rows();
  const Index r = B.cols();
  std::vector<Matrix> points;
  points.reserve(static_cast<std::size_t>(samples));
  for (long s = 0; s < samples; ++s) {
    if (s % 2 == 0) {
      points.push_back(random_stiefel_matrix(n, r, rng));
      continue;
    }
    const Matrix base = B * random_stiefel_matrix(r, r, rng);
    Matrix xi = tangent_projection(base, gaussian_matrix(n, r, rng));
    xi *= std::pow(10.0, -4.0 * rng.uniform()) / xi.norm();
    points.push_back(polar_retraction(base, xi));
  }
  return empirical_sharpness_ratio(p, set, points);
}

double subgradient_inequality_violation(const FiniteSumProblem& p, const Matrix& X, const Matrix& Y,
                                        double lipschitz_scale) {
  Matrix G;
  const double fx = p.value_and_subgradient(X, G);
  const Matrix xi = tangent_projection(X, G);
  const Matrix E = Y - X;
  const double coef = 0.5 * (p.weak_convexity() + lipschitz_scale * p.lipschitz());
  return fx + (xi.array() * E.array()).sum() - coef * E.squaredNorm() - p.value(Y);
}

double subgradient_inequality_check(const FiniteSumProblem& p, long pairs, Rng& rng, double lipschitz_scale) {
  if (pairs < 1) throw ConfigError("subgradient_inequality_check: pairs must be positive");
  const Index n = p.n();
  const Index r = p.r();
  const Matrix* data = p.data();
  double worst = -std::numeric_limits<double>::infinity();
  for (long s = 0; s < pairs; ++s) {
    Matrix X = random_stiefel_matrix(n, r, rng);
    Matrix Y;
    switch (s % 3) {
      case 0:
        Y = random_stiefel_matrix(n, r, rng);
        break;
      case 1: {
        Matrix xi = tangent_projection(X, gaussian_matrix(n, r, rng));
        xi *= std::pow(10.0, -3.0 * rng.uniform()) / xi.norm();
        Y = polar_retraction(X, xi);
        break;
      }
      default: {
        if (data != nullptr) {
          const auto i = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(data->cols())));
          const double norm = data->col(i).norm();
          if (norm > 0.0) {
            Matrix M = gaussian_matrix(n, r, rng);
            M.col(0) = data->col(i) / norm;
            Eigen::HouseholderQR<Matrix> qr(M);
            X = qr.householderQ() * Matrix::Identity(n, r);
            if (X.col(0).dot(M.col(0)) < 0.0) X.col(0) = -X.col(0);
          }
        }
        Y = random_stiefel_matrix(n, r, rng);
        break;
      }
    }
    worst = std::max(worst, subgradient_inequality_violation(p, X, Y, lipschitz_scale));
  }
  return worst;
}

}  // namespace riesub
