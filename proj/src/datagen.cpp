#include "riesub/datagen.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace riesub {

namespace {

void check_rsr_sizes(Index n, Index d, Index m1, Index m2) {
  if (d < 1 || d >= n) throw ConfigError("haystack: need 1 <= d < n");
  if (m1 < 0 || m2 < 0 || m1 + m2 < 1) throw ConfigError("haystack: need m1, m2 >= 0 and m1 + m2 >= 1");
}

enum class Law { gaussian, sphere };

RsrDataset gen_haystack(Index n, Index d, Index m1, Index m2, Rng& rng, Law law) {
  check_rsr_sizes(n, d, m1, m2);
  const Matrix Q = random_stiefel_matrix(n, n, rng);
  RsrDataset ds;
  ds.m1 = m1;
  ds.m2 = m2;
  ds.S = StiefelPoint<double>(Q.leftCols(d));
  ds.S_perp = StiefelPoint<double>(Q.rightCols(n - d));

  Matrix block(n, m1 + m2);
  for (Index j = 0; j < m1; ++j) {
    Vector g(d);
    for (Index i = 0; i < d; ++i) g(i) = rng.normal();
    g /= law == Law::gaussian ? std::sqrt(static_cast<double>(d)) : g.norm();
    block.col(j) = ds.S.matrix() * g;
  }
  for (Index j = 0; j < m2; ++j) {
    Vector h(n);
    for (Index i = 0; i < n; ++i) h(i) = rng.normal();
    h /= law == Law::gaussian ? std::sqrt(static_cast<double>(n)) : h.norm();
    block.col(m1 + j) = h;
  }

  const Index m = m1 + m2;
  ds.permutation.resize(static_cast<std::size_t>(m));
  std::iota(ds.permutation.begin(), ds.permutation.end(), Index{0});
  for (Index j = m - 1; j > 0; --j) {
    const auto k = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(j + 1)));
    std::swap(ds.permutation[j], ds.permutation[k]);
  }
  ds.data.resize(n, m);
  for (Index j = 0; j < m; ++j) ds.data.col(j) = block.col(ds.permutation[j]);
  return ds;
}

}  // namespace

Matrix RsrDataset::inliers() const {
  Matrix Y(n(), m1);
  for (Index j = 0; j < m(); ++j)
    if (permutation[j] < m1) Y.col(permutation[j]) = data.col(j);
  return Y;
}

Matrix RsrDataset::outliers() const {
  Matrix O(n(), m2);
  for (Index j = 0; j < m(); ++j)
    if (permutation[j] >= m1) O.col(permutation[j] - m1) = data.col(j);
  return O;
}

RsrDataset gen_haystack_gaussian(Index n, Index d, Index m1, Index m2, Rng& rng) {
  return gen_haystack(n, d, m1, m2, rng, Law::gaussian);
}

RsrDataset gen_haystack_sphere(Index n, Index d, Index m1, Index m2, Rng& rng) {
  return gen_haystack(n, d, m1, m2, rng, Law::sphere);
}

OdlDataset gen_odl(Index n, Index m, double theta, Rng& rng) {
  if (n < 1 || m < 1) throw ConfigError("odl: need n >= 1 and m >= 1");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("odl: theta must lie in (0, 1)");
  OdlDataset ds;
  ds.theta = theta;
  ds.A = random_stiefel(n, n, rng);
  ds.codes.resize(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) {
      const double u = rng.uniform();
      const double g = rng.normal();
      ds.codes(i, j) = u < theta ? g : 0.0;
    }
  ds.data = ds.A.matrix() * ds.codes;
  return ds;
}

StiefelPoint<double> spectral_init_dpcp(const Matrix& data, Index r) {
  if (r < 1 || r > data.rows()) throw ConfigError("spectral init: need 1 <= r <= n");
  const Matrix gram = data * data.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) throw NumericalError("spectral init: eigensolver failed", 0);
  return StiefelPoint<double>(es.eigenvectors().leftCols(r));
}

StiefelPoint<double> spectral_init_dpcp(const RsrDataset& dataset, Index r) {
  return spectral_init_dpcp(dataset.data, r);
}

StiefelPoint<double> random_init(Index n, Index r, Rng& rng) {
  if (r < 1 || r > n) throw ConfigError("random init: need 1 <= r <= n");
  return project_to_stiefel(gaussian_matrix(n, r, rng));
}

}  // namespace riesub
