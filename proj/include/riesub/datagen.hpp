#pragma once

#include <vector>

#include "riesub/manifold.hpp"

namespace riesub {

// Robust subspace recovery data: columns of [Y O] shuffled by a permutation.
struct RsrDataset {
  Matrix data;
  Index m1 = 0;
  Index m2 = 0;
  StiefelPoint<double> S;       // n x d basis of the inlier subspace
  StiefelPoint<double> S_perp;  // n x (n - d) complement
  // data.col(j) = [Y O].col(permutation[j])
  std::vector<Index> permutation;

  Index n() const { return data.rows(); }
  Index d() const { return S.r(); }
  Index m() const { return data.cols(); }
  bool is_inlier(Index j) const { return permutation[j] < m1; }
  // Unshuffled inlier block Y (n x m1) and outlier block O (n x m2).
  Matrix inliers() const;
  Matrix outliers() const;
};

struct OdlDataset {
  Matrix data;  // A * codes
  StiefelPoint<double> A;
  Matrix codes;
  double theta = 0.0;
};

// Inliers S g / sqrt(d), outliers h / sqrt(n), with g, h standard normal.
RsrDataset gen_haystack_gaussian(Index n, Index d, Index m1, Index m2, Rng& rng);
// Inliers uniform on the unit sphere of col(S), outliers uniform on S^{n-1}.
RsrDataset gen_haystack_sphere(Index n, Index d, Index m1, Index m2, Rng& rng);
// A Haar-random orthogonal, codes Bernoulli(theta) * N(0, 1).
OdlDataset gen_odl(Index n, Index m, double theta, Rng& rng);

// Eigenvectors of the r smallest eigenvalues of data * data^T.
StiefelPoint<double> spectral_init_dpcp(const Matrix& data, Index r);
StiefelPoint<double> spectral_init_dpcp(const RsrDataset& dataset, Index r);

// Gaussian matrix projected onto St(n, r).
StiefelPoint<double> random_init(Index n, Index r, Rng& rng);

}  // namespace riesub
