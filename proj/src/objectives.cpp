#include "riesub/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace riesub {

// ---------------------------------------------------------------------------
// FiniteSumProblem
// ---------------------------------------------------------------------------

void FiniteSumProblem::finalize_constants() {
  if (m_ < 1) throw ConfigError("finite-sum problem needs at least one component");
  lipschitz_ = 0.0;
  tau_ = 0.0;
  for (Index i = 0; i < m_; ++i) {
    lipschitz_ = std::max(lipschitz_, component_lipschitz(i));
    tau_ = std::max(tau_, component_weak_convexity(i));
  }
}

void FiniteSumProblem::check_shape(const Matrix& X) const {
  if (X.rows() != n_ || X.cols() != r_)
    throw DimensionError("problem expects " + std::to_string(n_) + "x" + std::to_string(r_) +
                         ", got " + std::to_string(X.rows()) + "x" + std::to_string(X.cols()));
}

void FiniteSumProblem::check_index(Index i) const {
  if (i < 0 || i >= m_) throw ConfigError("component index " + std::to_string(i) + " out of range");
}

double FiniteSumProblem::value(const Matrix& X) const {
  check_shape(X);
  double sum = 0.0;
  for (Index i = 0; i < m_; ++i) sum += component_value(i, X);
  return sum / static_cast<double>(m_);
}

double FiniteSumProblem::value_and_subgradient(const Matrix& X, Matrix& G) const {
  check_shape(X);
  G.setZero(n_, r_);
  double sum = 0.0;
  for (Index i = 0; i < m_; ++i) {
    sum += component_value(i, X);
    G += component_subgradient(i, X);
  }
  G /= static_cast<double>(m_);
  return sum / static_cast<double>(m_);
}

ComponentOracle FiniteSumProblem::component(Index i) const {
  check_index(i);
  ComponentOracle c;
  c.value = [this, i](const Matrix& X) { return component_value(i, X); };
  c.euclidean_subgradient = [this, i](const Matrix& X) { return component_subgradient(i, X); };
  c.lipschitz_bound = component_lipschitz(i);
  c.weak_convexity = component_weak_convexity(i);
  return c;
}

// ---------------------------------------------------------------------------
// ComponentListProblem
// ---------------------------------------------------------------------------

ComponentListProblem::ComponentListProblem(Index n, Index r, std::vector<ComponentOracle> components)
    : FiniteSumProblem(n, r, static_cast<Index>(components.size())), components_(std::move(components)) {
  for (const auto& c : components_)
    if (!c.value || !c.euclidean_subgradient) throw ConfigError("component oracle missing a function");
  finalize_constants();
}

double ComponentListProblem::component_value(Index i, const Matrix& X) const {
  check_index(i);
  return components_[i].value(X);
}

Matrix ComponentListProblem::component_subgradient(Index i, const Matrix& X) const {
  check_index(i);
  Matrix G = components_[i].euclidean_subgradient(X);
  if (G.rows() != n() || G.cols() != r()) throw DimensionError("component subgradient has wrong shape");
  return G;
}

double ComponentListProblem::component_lipschitz(Index i) const { return components_[i].lipschitz_bound; }

double ComponentListProblem::component_weak_convexity(Index i) const { return components_[i].weak_convexity; }

// ---------------------------------------------------------------------------
// DPCP
// ---------------------------------------------------------------------------

namespace {

void require_data(const Matrix& Y) {
  if (Y.cols() < 1 || Y.rows() < 1) throw ConfigError("empty data matrix");
  if (!Y.allFinite()) throw ConfigError("data matrix has non-finite entries");
}

}  // namespace

DpcpProblem::DpcpProblem(Matrix data, Index r)
    : FiniteSumProblem(data.rows(), r, data.cols()), Y_(std::move(data)) {
  require_data(Y_);
  if (r < 1 || r > Y_.rows()) throw ConfigError("dpcp: need 1 <= r <= n");
  norms_ = Y_.colwise().norm().transpose();
  finalize_constants();
}

double DpcpProblem::component_value(Index i, const Matrix& X) const {
  check_index(i);
  check_shape(X);
  return (X.transpose() * Y_.col(i)).norm();
}

Matrix DpcpProblem::component_subgradient(Index i, const Matrix& X) const {
  check_index(i);
  check_shape(X);
  const Vector v = X.transpose() * Y_.col(i);
  const double nv = v.norm();
  if (nv <= kKinkTol * norms_(i)) return Matrix::Zero(n(), r());
  return Y_.col(i) * (v / nv).transpose();
}

// (I - X X^T) y w^T with w = X^T y / ||X^T y||.
std::optional<RankOneTangent> DpcpProblem::component_rank_one(Index i, const Matrix& X) const {
  const Vector v = X.transpose() * Y_.col(i);
  const double nv = v.norm();
  RankOneTangent t;
  if (nv <= kKinkTol * norms_(i)) {
    t.u = Vector::Zero(n());
    t.v = Vector::Zero(r());
    return t;
  }
  t.u = Y_.col(i);
  t.u.noalias() -= X * v;
  t.v = v / nv;
  return t;
}

double DpcpProblem::value(const Matrix& X) const {
  check_shape(X);
  const Matrix V = Y_.transpose() * X;
  return V.rowwise().norm().sum() / static_cast<double>(m());
}

double DpcpProblem::value_and_subgradient(const Matrix& X, Matrix& G) const {
  check_shape(X);
  Matrix W = Y_.transpose() * X;
  double sum = 0.0;
  for (Index i = 0; i < m(); ++i) {
    const double nv = W.row(i).norm();
    sum += nv;
    if (nv <= kKinkTol * norms_(i))
      W.row(i).setZero();
    else
      W.row(i) /= nv;
  }
  G.noalias() = Y_ * W;
  G /= static_cast<double>(m());
  return sum / static_cast<double>(m());
}

// ---------------------------------------------------------------------------
// LAD
// ---------------------------------------------------------------------------

LadProblem::LadProblem(Matrix data, Index d, double tau)
    : FiniteSumProblem(data.rows(), d, data.cols()), Y_(std::move(data)) {
  require_data(Y_);
  if (d < 1 || d > Y_.rows()) throw ConfigError("lad: need 1 <= d <= n");
  norms_ = Y_.colwise().norm().transpose();
  tau_ = tau >= 0.0 ? tau : 2.0 * norms_.maxCoeff();
  finalize_constants();
}

double LadProblem::component_value(Index i, const Matrix& X) const {
  check_index(i);
  check_shape(X);
  Vector res = Y_.col(i);
  res.noalias() -= X * (X.transpose() * Y_.col(i));
  return res.norm();
}

Matrix LadProblem::component_subgradient(Index i, const Matrix& X) const {
  check_index(i);
  check_shape(X);
  const Vector v = X.transpose() * Y_.col(i);
  Vector res = Y_.col(i);
  res.noalias() -= X * v;
  const double nr = res.norm();
  if (nr <= kKinkTol * norms_(i)) return Matrix::Zero(n(), r());
  return -(res / nr) * v.transpose();
}

// The Euclidean subgradient is already tangent since X^T u = 0.
std::optional<RankOneTangent> LadProblem::component_rank_one(Index i, const Matrix& X) const {
  const Vector v = X.transpose() * Y_.col(i);
  Vector res = Y_.col(i);
  res.noalias() -= X * v;
  const double nr = res.norm();
  RankOneTangent t;
  if (nr <= kKinkTol * norms_(i)) {
    t.u = Vector::Zero(n());
    t.v = Vector::Zero(r());
    return t;
  }
  t.u = -res / nr;
  t.v = v;
  return t;
}

double LadProblem::value(const Matrix& X) const {
  check_shape(X);
  Matrix R = Y_;
  R.noalias() -= X * (X.transpose() * Y_);
  return R.colwise().norm().sum() / static_cast<double>(m());
}

double LadProblem::value_and_subgradient(const Matrix& X, Matrix& G) const {
  check_shape(X);
  const Matrix V = X.transpose() * Y_;
  Matrix R = Y_;
  R.noalias() -= X * V;
  double sum = 0.0;
  for (Index i = 0; i < m(); ++i) {
    const double nr = R.col(i).norm();
    sum += nr;
    if (nr <= kKinkTol * norms_(i))
      R.col(i).setZero();
    else
      R.col(i) /= nr;
  }
  G.noalias() = -R * V.transpose();
  G /= static_cast<double>(m());
  return sum / static_cast<double>(m());
}

// ---------------------------------------------------------------------------
// ODL
// ---------------------------------------------------------------------------

namespace {

double kink_sign(double x, double scale) {
  if (std::abs(x) <= kKinkTol * scale) return 0.0;
  return x > 0.0 ? 1.0 : -1.0;
}

}  // namespace

OdlProblem::OdlProblem(Matrix data, OdlFrame frame)
    : FiniteSumProblem(data.rows(), frame == OdlFrame::full ? data.rows() : 1, data.cols()),
      Y_(std::move(data)) {
  require_data(Y_);
  norms_ = Y_.colwise().norm().transpose();
  finalize_constants();
}

double OdlProblem::component_lipschitz(Index i) const {
  return std::sqrt(static_cast<double>(r())) * norms_(i);
}

double OdlProblem::component_value(Index i, const Matrix& X) const {
  check_index(i);
  check_shape(X);
  return (X.transpose() * Y_.col(i)).lpNorm<1>();
}

Matrix OdlProblem::component_subgradient(Index i, const Matrix& X) const {
  check_index(i);
  check_shape(X);
  Vector s = X.transpose() * Y_.col(i);
  for (Index j = 0; j < s.size(); ++j) s(j) = kink_sign(s(j), norms_(i));
  return Y_.col(i) * s.transpose();
}

double OdlProblem::value(const Matrix& X) const {
  check_shape(X);
  const Matrix V = Y_.transpose() * X;
  return V.cwiseAbs().sum() / static_cast<double>(m());
}

double OdlProblem::value_and_subgradient(const Matrix& X, Matrix& G) const {
  check_shape(X);
  Matrix V = Y_.transpose() * X;
  double sum = 0.0;
  for (Index j = 0; j < V.cols(); ++j)
    for (Index i = 0; i < V.rows(); ++i) {
      sum += std::abs(V(i, j));
      V(i, j) = kink_sign(V(i, j), norms_(i));
    }
  G.noalias() = Y_ * V;
  G /= static_cast<double>(m());
  return sum / static_cast<double>(m());
}

// ---------------------------------------------------------------------------
// Factories and helpers
// ---------------------------------------------------------------------------

std::shared_ptr<DpcpProblem> dpcp_problem(Matrix data, Index r) {
  return std::make_shared<DpcpProblem>(std::move(data), r);
}

std::shared_ptr<LadProblem> lad_problem(Matrix data, Index d, double tau) {
  return std::make_shared<LadProblem>(std::move(data), d, tau);
}

std::shared_ptr<OdlProblem> odl_problem(Matrix data, OdlFrame frame) {
  return std::make_shared<OdlProblem>(std::move(data), frame);
}

TangentVector<double> riemannian_subgradient(const FiniteSumProblem& p, const StiefelPoint<double>& X,
                                             Index i) {
  Matrix G;
  if (i < 0)
    p.value_and_subgradient(X.matrix(), G);
  else
    G = p.component_subgradient(i, X.matrix());
  return tangent_project(X, G);
}

double finite_difference_check(const ComponentOracle& c, const StiefelPoint<double>& X, double step,
                               long trials, Rng& rng) {
  if (!(step > 0.0 && step <= 1e-3)) throw ConfigError("finite_difference_check: step must be in (0, 1e-3]");
  const Matrix& X0 = X.matrix();
  const Matrix G = c.euclidean_subgradient(X0);
  const double f0 = c.value(X0);
  double worst = 0.0;
  long done = 0;
  long attempts = 0;
  while (done < trials) {
    if (++attempts > 100 * trials + 1000) throw NumericalError("finite_difference_check: only kinks found", attempts);
    Matrix D = gaussian_matrix(X0.rows(), X0.cols(), rng);
    D /= D.norm();
    const double fp = c.value(X0 + step * D);
    const double fm = c.value(X0 - step * D);
    const double fwd = (fp - f0) / step;
    const double bwd = (f0 - fm) / step;
    // A kink within 10 steps shows as disagreeing one-sided slopes.
    const double fp10 = c.value(X0 + 10.0 * step * D);
    const double fm10 = c.value(X0 - 10.0 * step * D);
    const double fwd10 = (fp10 - f0) / (10.0 * step);
    const double bwd10 = (f0 - fm10) / (10.0 * step);
    const double tol = 1e-3 * (1.0 + std::abs(fwd));
    if (std::abs(fwd - bwd) > tol || std::abs(fwd10 - bwd10) > 10.0 * tol) continue;
    const double fd = (fp - fm) / (2.0 * step);
    const double ip = (G.array() * D.array()).sum();
    worst = std::max(worst, std::abs(fd - ip) / (1.0 + std::abs(fd)));
    ++done;
  }
  return worst;
}

}  // namespace riesub
