#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "riesub/errors.hpp"
#include "riesub/rng.hpp"

namespace riesub {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

inline constexpr double kFeasibilityTol = 1e-8;
inline constexpr double kSingularTol = 1e-12;

namespace detail {

template <typename DA, typename DB>
void require_same_shape(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                        const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(where) + ": shape " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix-level operations on St(n, r) = { X : X^T X = I_r }.
// ---------------------------------------------------------------------------

template <typename Derived>
typename Derived::Scalar feasibility_error(const Eigen::MatrixBase<Derived>& X) {
  using S = typename Derived::Scalar;
  return (X.transpose() * X - Mat<S>::Identity(X.cols(), X.cols())).norm();
}

// B - X sym(X^T B).
template <typename DX, typename DB>
Mat<typename DX::Scalar> tangent_projection(const Eigen::MatrixBase<DX>& X,
                                            const Eigen::MatrixBase<DB>& B) {
  using S = typename DX::Scalar;
  detail::require_same_shape(X, B, "tangent_projection");
  const Mat<S> XtB = X.transpose() * B;
  const Mat<S> sym = (XtB + XtB.transpose()) * S(0.5);
  Mat<S> out = B;
  out.noalias() -= X * sym;
  return out;
}

// X sym(X^T B).
template <typename DX, typename DB>
Mat<typename DX::Scalar> normal_projection(const Eigen::MatrixBase<DX>& X,
                                           const Eigen::MatrixBase<DB>& B) {
  using S = typename DX::Scalar;
  detail::require_same_shape(X, B, "normal_projection");
  const Mat<S> XtB = X.transpose() * B;
  return X * ((XtB + XtB.transpose()) * S(0.5));
}

// (X + xi)(I + xi^T xi)^{-1/2}, via the eigendecomposition of xi^T xi.
template <typename DX, typename DT>
Mat<typename DX::Scalar> polar_retraction(const Eigen::MatrixBase<DX>& X,
                                          const Eigen::MatrixBase<DT>& xi) {
  using S = typename DX::Scalar;
  detail::require_same_shape(X, xi, "polar_retraction");
  const Mat<S> gram = xi.transpose() * xi;
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(gram);
  const Vec<S> scale = (es.eigenvalues().array().max(S(0)) + S(1)).rsqrt().matrix();
  const Mat<S> inv_sqrt = es.eigenvectors() * scale.asDiagonal() * es.eigenvectors().transpose();
  return (X + xi) * inv_sqrt;
}

// Polar retraction for a rank-one tangent step xi = u v^T, in place, O(n r).
template <typename S>
void polar_retraction_rank_one(Mat<S>& X, const Vec<S>& u, const Vec<S>& v) {
  const S unorm = u.norm();
  const S vnorm = v.norm();
  if (unorm == S(0) || vnorm == S(0)) return;
  const S s = unorm * unorm * vnorm * vnorm;
  const S root = std::sqrt(S(1) + s);
  // (1 + s)^{-1/2} - 1 without cancellation.
  const S c = -s / (root * (S(1) + root));
  const Vec<S> vhat = v / vnorm;
  Vec<S> z = X * vhat;
  z += u * vnorm;
  X.noalias() += u * v.transpose();
  X.noalias() += (c * z) * vhat.transpose();
}

// Q factor of X + xi with the diagonal of R made positive.
template <typename DX, typename DT>
Mat<typename DX::Scalar> qr_retraction(const Eigen::MatrixBase<DX>& X,
                                       const Eigen::MatrixBase<DT>& xi) {
  using S = typename DX::Scalar;
  detail::require_same_shape(X, xi, "qr_retraction");
  const Mat<S> M = X + xi;
  Eigen::HouseholderQR<Mat<S>> qr(M);
  Mat<S> Q = qr.householderQ() * Mat<S>::Identity(M.rows(), M.cols());
  const Mat<S> R = qr.matrixQR().topRows(M.cols()).template triangularView<Eigen::Upper>();
  for (Index j = 0; j < M.cols(); ++j) {
    if (std::abs(R(j, j)) <= S(kSingularTol)) throw SingularityError("qr_retraction: rank deficient");
    if (R(j, j) < S(0)) Q.col(j) = -Q.col(j);
  }
  return Q;
}

// Nearest point of St(n, r) in Frobenius norm: U V^T from the thin SVD.
template <typename Derived>
Mat<typename Derived::Scalar> stiefel_projection(const Eigen::MatrixBase<Derived>& M) {
  using S = typename Derived::Scalar;
  if (M.cols() > M.rows()) throw DimensionError("stiefel_projection: more columns than rows");
  Eigen::JacobiSVD<Mat<S>> svd(M.eval(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (M.cols() > 0 && svd.singularValues().minCoeff() <= S(kSingularTol))
    throw SingularityError("stiefel_projection: smallest singular value below threshold");
  return svd.matrixU() * svd.matrixV().transpose();
}

// Columns completing X (n x r, orthonormal) to an orthonormal basis of R^n.
template <typename Derived>
Mat<typename Derived::Scalar> orthogonal_complement(const Eigen::MatrixBase<Derived>& X) {
  using S = typename Derived::Scalar;
  const Index n = X.rows();
  const Index r = X.cols();
  Eigen::HouseholderQR<Mat<S>> qr(X.eval());
  const Mat<S> Q = qr.householderQ() * Mat<S>::Identity(n, n);
  return Q.rightCols(n - r);
}

// Uniform (Haar) sample: QR of a Gaussian matrix with diag(R) > 0.
template <typename S = double>
Mat<S> random_stiefel_matrix(Index n, Index r, Rng& rng) {
  if (r > n || r <= 0) throw DimensionError("random_stiefel: need 0 < r <= n");
  const Mat<S> G = gaussian_matrix(n, r, rng).template cast<S>();
  Eigen::HouseholderQR<Mat<S>> qr(G);
  Mat<S> Q = qr.householderQ() * Mat<S>::Identity(n, r);
  for (Index j = 0; j < r; ++j)
    if (qr.matrixQR()(j, j) < S(0)) Q.col(j) = -Q.col(j);
  return Q;
}

// ---------------------------------------------------------------------------
// Typed wrappers.
// ---------------------------------------------------------------------------

template <typename Scalar>
class StiefelPoint {
 public:
  StiefelPoint() = default;

  explicit StiefelPoint(Mat<Scalar> X, Scalar tol = Scalar(kFeasibilityTol)) : X_(std::move(X)) {
    if (X_.cols() > X_.rows()) throw DimensionError("StiefelPoint: more columns than rows");
    if (!X_.allFinite()) throw FeasibilityError("StiefelPoint: non-finite entries");
    const Scalar err = feasibility_error(X_);
    if (!(err <= tol))
      throw FeasibilityError("StiefelPoint: ||X^T X - I|| = " + std::to_string(double(err)));
  }

  const Mat<Scalar>& matrix() const { return X_; }
  Index n() const { return X_.rows(); }
  Index r() const { return X_.cols(); }

 private:
  Mat<Scalar> X_;
};

template <typename Scalar>
class TangentVector {
 public:
  TangentVector(const StiefelPoint<Scalar>& base, Mat<Scalar> data,
                Scalar tol = Scalar(kFeasibilityTol))
      : base_(base), data_(std::move(data)) {
    detail::require_same_shape(base_.matrix(), data_, "TangentVector");
    const Mat<Scalar> XtV = base_.matrix().transpose() * data_;
    const Scalar scale = std::max(Scalar(1), data_.norm());
    if (!((XtV + XtV.transpose()).norm() <= tol * scale))
      throw FeasibilityError("TangentVector: X^T V + V^T X != 0");
  }

  const StiefelPoint<Scalar>& base() const { return base_; }
  const Mat<Scalar>& matrix() const { return data_; }

 private:
  StiefelPoint<Scalar> base_;
  Mat<Scalar> data_;
};

template <typename Scalar>
TangentVector<Scalar> tangent_project(const StiefelPoint<Scalar>& X, const Mat<Scalar>& B) {
  return TangentVector<Scalar>(X, tangent_projection(X.matrix(), B));
}

template <typename Scalar>
Mat<Scalar> normal_project(const StiefelPoint<Scalar>& X, const Mat<Scalar>& B) {
  return normal_projection(X.matrix(), B);
}

template <typename Scalar>
StiefelPoint<Scalar> retract_polar(const TangentVector<Scalar>& xi) {
  return StiefelPoint<Scalar>(polar_retraction(xi.base().matrix(), xi.matrix()));
}

template <typename Scalar>
StiefelPoint<Scalar> retract_qr(const TangentVector<Scalar>& xi) {
  return StiefelPoint<Scalar>(qr_retraction(xi.base().matrix(), xi.matrix()));
}

template <typename Scalar>
StiefelPoint<Scalar> project_to_stiefel(const Mat<Scalar>& M) {
  return StiefelPoint<Scalar>(stiefel_projection(M));
}

template <typename Scalar = double>
StiefelPoint<Scalar> random_stiefel(Index n, Index r, Rng& rng) {
  return StiefelPoint<Scalar>(random_stiefel_matrix<Scalar>(n, r, rng));
}

// The set { B R : R in O(r) } for an orthonormal basis B (n x r).
template <typename Scalar>
class RotationSolutionSet {
 public:
  explicit RotationSolutionSet(StiefelPoint<Scalar> basis) : basis_(std::move(basis)) {}
  const StiefelPoint<Scalar>& basis() const { return basis_; }

 private:
  StiefelPoint<Scalar> basis_;
};

template <typename Scalar>
struct DistanceResult {
  Scalar distance;
  Mat<Scalar> nearest;
};

// Orthogonal Procrustes: nearest = B U W^T where B^T X = U S W^T.
template <typename DX, typename DB>
DistanceResult<typename DX::Scalar> procrustes_distance(const Eigen::MatrixBase<DX>& X,
                                                        const Eigen::MatrixBase<DB>& basis) {
  using S = typename DX::Scalar;
  detail::require_same_shape(X, basis, "procrustes_distance");
  const Mat<S> C = basis.transpose() * X;
  Eigen::JacobiSVD<Mat<S>> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat<S> nearest = basis * (svd.matrixU() * svd.matrixV().transpose());
  const S d = (X - nearest).norm();
  return {d, std::move(nearest)};
}

template <typename Scalar>
DistanceResult<Scalar> dist_to_set(const StiefelPoint<Scalar>& X,
                                   const RotationSolutionSet<Scalar>& set) {
  if (X.n() != set.basis().n() || X.r() != set.basis().r())
    throw DimensionError("dist_to_set: point and set dimensions differ");
  return procrustes_distance(X.matrix(), set.basis().matrix());
}

// ---------------------------------------------------------------------------
// Runtime manifold contract used to run the retraction checks on several
// embedded manifolds with one code path.
// ---------------------------------------------------------------------------

enum class RetractionKind { polar, qr };

struct ManifoldContract {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  double feasibility_tol = kFeasibilityTol;
  std::function<Matrix(const Matrix&, const Matrix&)> project_tangent;
  std::function<Matrix(const Matrix&, const Matrix&)> retract;
  std::function<Matrix(Rng&)> random_point;
  std::function<double(const Matrix&)> feasibility;
};

inline ManifoldContract stiefel_contract(Index n, Index r, RetractionKind kind = RetractionKind::polar) {
  ManifoldContract c;
  c.name = kind == RetractionKind::polar ? "stiefel-polar" : "stiefel-qr";
  c.rows = n;
  c.cols = r;
  c.project_tangent = [](const Matrix& X, const Matrix& B) { return tangent_projection(X, B); };
  if (kind == RetractionKind::polar)
    c.retract = [](const Matrix& X, const Matrix& xi) { return polar_retraction(X, xi); };
  else
    c.retract = [](const Matrix& X, const Matrix& xi) { return qr_retraction(X, xi); };
  c.random_point = [n, r](Rng& rng) { return random_stiefel_matrix(n, r, rng); };
  c.feasibility = [](const Matrix& X) { return feasibility_error(X); };
  return c;
}

// Product of unit spheres: every column has unit norm.
inline ManifoldContract oblique_contract(Index n, Index r) {
  ManifoldContract c;
  c.name = "oblique";
  c.rows = n;
  c.cols = r;
  c.project_tangent = [](const Matrix& X, const Matrix& B) {
    Matrix out = B;
    for (Index j = 0; j < X.cols(); ++j) out.col(j) -= X.col(j) * X.col(j).dot(B.col(j));
    return out;
  };
  c.retract = [](const Matrix& X, const Matrix& xi) {
    Matrix out = X + xi;
    out.colwise().normalize();
    return out;
  };
  c.random_point = [n, r](Rng& rng) {
    Matrix out = gaussian_matrix(n, r, rng);
    out.colwise().normalize();
    return out;
  };
  c.feasibility = [](const Matrix& X) {
    return (X.colwise().squaredNorm().array() - 1.0).matrix().norm();
  };
  return c;
}

inline ManifoldContract sphere_contract(Index n) {
  ManifoldContract c = oblique_contract(n, 1);
  c.name = "sphere";
  return c;
}

// Empirical sup of ||Retr_X(xi) - X - xi|| / ||xi||^2 over random X and xi.
// Step lengths are log-uniform in [1e-4, 3]; per-column scales are drawn
// independently so that samples concentrated on one column also occur.
inline double estimate_second_order_bound(const ManifoldContract& c, long samples, Rng& rng) {
  double best = 0.0;
  for (long s = 0; s < samples; ++s) {
    const Matrix X = c.random_point(rng);
    Matrix dir = gaussian_matrix(c.rows, c.cols, rng);
    for (Index j = 0; j < c.cols; ++j) dir.col(j) *= std::pow(10.0, -3.0 * rng.uniform());
    dir = c.project_tangent(X, dir);
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    const double t = std::pow(10.0, -4.0 + 4.5 * rng.uniform());
    const Matrix xi = dir * (t / norm);
    const Matrix R = c.retract(X, xi);
    best = std::max(best, (R - X - xi).norm() / (t * t));
  }
  return best;
}

}  // namespace riesub
