#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "riesub/manifold.hpp"

namespace riesub {

// Relative threshold below which ||X^T y||, |y^T x| or ||(I - XX^T) y|| is
// treated as an exact kink, where the subgradient selection is zero.
inline constexpr double kKinkTol = 1e-12;

struct ComponentOracle {
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> euclidean_subgradient;
  double lipschitz_bound = 0.0;
  double weak_convexity = 0.0;
};

// Riemannian subgradient of one component written as u v^T.
struct RankOneTangent {
  Vector u;
  Vector v;
};

// f(X) = (1/m) sum_i f_i(X) over St(n, r).
//
// Subclasses provide per-component oracles; the batch entry points default to
// loops and are overridden where a matrix formulation is cheaper.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  Index n() const { return n_; }
  Index r() const { return r_; }
  Index m() const { return m_; }

  virtual double component_value(Index i, const Matrix& X) const = 0;
  virtual Matrix component_subgradient(Index i, const Matrix& X) const = 0;
  virtual double component_lipschitz(Index i) const = 0;
  virtual double component_weak_convexity(Index i) const = 0;

  // Riemannian component subgradient in factored form, when it is rank one.
  virtual std::optional<RankOneTangent> component_rank_one(Index, const Matrix&) const {
    return std::nullopt;
  }

  virtual double value(const Matrix& X) const;
  // Returns f(X) and writes the averaged Euclidean subgradient to G.
  virtual double value_and_subgradient(const Matrix& X, Matrix& G) const;

  // Data columns when the problem is data-driven, else nullptr.
  virtual const Matrix* data() const { return nullptr; }

  double lipschitz() const { return lipschitz_; }
  double weak_convexity() const { return tau_; }

  ComponentOracle component(Index i) const;

 protected:
  FiniteSumProblem(Index n, Index r, Index m) : n_(n), r_(r), m_(m) {}
  // Call once the per-component constants are available.
  void finalize_constants();
  void check_shape(const Matrix& X) const;
  void check_index(Index i) const;

 private:
  Index n_, r_, m_;
  double lipschitz_ = 0.0;
  double tau_ = 0.0;
};

using ProblemPtr = std::shared_ptr<const FiniteSumProblem>;

// Problem assembled from user-supplied component oracles.
class ComponentListProblem : public FiniteSumProblem {
 public:
  ComponentListProblem(Index n, Index r, std::vector<ComponentOracle> components);

  double component_value(Index i, const Matrix& X) const override;
  Matrix component_subgradient(Index i, const Matrix& X) const override;
  double component_lipschitz(Index i) const override;
  double component_weak_convexity(Index i) const override;

 private:
  std::vector<ComponentOracle> components_;
};

// f_i(X) = ||y_i^T X||_2 over St(n, r).
class DpcpProblem : public FiniteSumProblem {
 public:
  DpcpProblem(Matrix data, Index r);

  double component_value(Index i, const Matrix& X) const override;
  Matrix component_subgradient(Index i, const Matrix& X) const override;
  double component_lipschitz(Index i) const override { return norms_(i); }
  double component_weak_convexity(Index) const override { return 0.0; }
  std::optional<RankOneTangent> component_rank_one(Index i, const Matrix& X) const override;
  double value(const Matrix& X) const override;
  double value_and_subgradient(const Matrix& X, Matrix& G) const override;
  const Matrix* data() const override { return &Y_; }

 private:
  Matrix Y_;
  Vector norms_;
};

// f_i(X) = ||(I - X X^T) y_i||_2 over St(n, d).
class LadProblem : public FiniteSumProblem {
 public:
  // tau < 0 selects the default 2 max_i ||y_i||.
  LadProblem(Matrix data, Index d, double tau = -1.0);

  double component_value(Index i, const Matrix& X) const override;
  Matrix component_subgradient(Index i, const Matrix& X) const override;
  double component_lipschitz(Index i) const override { return norms_(i); }
  double component_weak_convexity(Index) const override { return tau_; }
  std::optional<RankOneTangent> component_rank_one(Index i, const Matrix& X) const override;
  double value(const Matrix& X) const override;
  double value_and_subgradient(const Matrix& X, Matrix& G) const override;
  const Matrix* data() const override { return &Y_; }

 private:
  Matrix Y_;
  Vector norms_;
  double tau_;
};

enum class OdlFrame { full, single };

// f_i(X) = ||y_i^T X||_1 over St(n, n), or |y_i^T x| over the sphere.
class OdlProblem : public FiniteSumProblem {
 public:
  OdlProblem(Matrix data, OdlFrame frame);

  double component_value(Index i, const Matrix& X) const override;
  Matrix component_subgradient(Index i, const Matrix& X) const override;
  double component_lipschitz(Index i) const override;
  double component_weak_convexity(Index) const override { return 0.0; }
  double value(const Matrix& X) const override;
  double value_and_subgradient(const Matrix& X, Matrix& G) const override;
  const Matrix* data() const override { return &Y_; }

 private:
  Matrix Y_;
  Vector norms_;
};

std::shared_ptr<DpcpProblem> dpcp_problem(Matrix data, Index r);
std::shared_ptr<LadProblem> lad_problem(Matrix data, Index d, double tau = -1.0);
std::shared_ptr<OdlProblem> odl_problem(Matrix data, OdlFrame frame);

// Tangent projection of the averaged (i < 0) or i-th Euclidean subgradient.
TangentVector<double> riemannian_subgradient(const FiniteSumProblem& p, const StiefelPoint<double>& X,
                                             Index i = -1);

// Max over trials of |FD - <G, D>| / (1 + |FD|) for random unit directions D,
// central differences with the given step. Trials whose one-sided slopes
// disagree (a kink within reach) are resampled.
double finite_difference_check(const ComponentOracle& c, const StiefelPoint<double>& X, double step,
                               long trials, Rng& rng);

}  // namespace riesub
