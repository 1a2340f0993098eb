#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "riesub/datagen.hpp"

using namespace riesub;

namespace {

double dist_to(const StiefelPoint<double>& X, const StiefelPoint<double>& B) {
  return procrustes_distance(X.matrix(), B.matrix()).distance;
}

}  // namespace

TEST(Haystack, CleanDataVanishesAtComplement) {
  Rng rng(1);
  for (const RsrDataset& ds : {gen_haystack_gaussian(10, 6, 40, 0, rng), gen_haystack_sphere(10, 6, 40, 0, rng)}) {
    EXPECT_LE(oracle::dpcp_value(ds.data, ds.S_perp.matrix()), 1e-14);
    EXPECT_LE((ds.S.matrix().transpose() * ds.S_perp.matrix()).norm(), 1e-13);
    EXPECT_EQ(ds.S_perp.r(), 4);
  }
}

TEST(Haystack, GaussianColumnNormsHaveUnitMean) {
  Rng rng(2);
  const RsrDataset ds = gen_haystack_gaussian(20, 5, 4000, 4000, rng);
  for (const Matrix& block : {ds.inliers(), ds.outliers()}) {
    const Eigen::ArrayXd sq = block.colwise().squaredNorm().transpose().array();
    const double mean = sq.mean();
    const double sd = std::sqrt((sq - mean).square().sum() / static_cast<double>(sq.size() - 1));
    EXPECT_NEAR(mean, 1.0, 5.0 * sd / std::sqrt(static_cast<double>(sq.size())));
  }
  EXPECT_LE((ds.S_perp.matrix().transpose() * ds.inliers()).norm(), 1e-12);
}

TEST(Haystack, SphereHasUnitColumns) {
  Rng rng(3);
  const RsrDataset ds = gen_haystack_sphere(15, 10, 200, 300, rng);
  EXPECT_LE((ds.data.colwise().norm().array() - 1.0).abs().maxCoeff(), 1e-14);
  EXPECT_LE((ds.S_perp.matrix().transpose() * ds.inliers()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_GT((ds.S_perp.matrix().transpose() * ds.outliers()).colwise().norm().minCoeff(), 0.0);
}

TEST(Haystack, PermutationRoundTrip) {
  Rng rng(4);
  const RsrDataset ds = gen_haystack_sphere(6, 3, 7, 5, rng);
  ASSERT_EQ(ds.permutation.size(), 12u);
  EXPECT_EQ(std::set<Index>(ds.permutation.begin(), ds.permutation.end()).size(), 12u);
  const Matrix Y = ds.inliers(), O = ds.outliers();
  Index inl = 0;
  for (Index j = 0; j < ds.m(); ++j) {
    const Index k = ds.permutation[static_cast<std::size_t>(j)];
    const Matrix& src = k < ds.m1 ? Y : O;
    const Index col = k < ds.m1 ? k : k - ds.m1;
    EXPECT_EQ((ds.data.col(j) - src.col(col)).norm(), 0.0);
    if (ds.is_inlier(j)) ++inl;
  }
  EXPECT_EQ(inl, 7);
}

TEST(Haystack, DefaultSizeIsFast) {
  Rng rng(5);
  const auto t0 = std::chrono::steady_clock::now();
  const RsrDataset ds = gen_haystack_sphere(100, 90, 1500, 3500, rng);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(ds.m(), 5000);
  EXPECT_LT(s, 1.0);
}

TEST(Haystack, InvalidSizesThrow) {
  Rng rng(6);
  EXPECT_THROW(gen_haystack_sphere(5, 5, 10, 10, rng), ConfigError);
  EXPECT_THROW(gen_haystack_gaussian(5, 0, 10, 10, rng), ConfigError);
}

TEST(Odl, SparsityAndFactorization) {
  Rng rng(7);
  const OdlDataset ds = gen_odl(100, 10000, 0.3, rng);
  const double frac = static_cast<double>((ds.codes.array() != 0.0).count()) / 1e6;
  EXPECT_GE(frac, 0.2985);
  EXPECT_LE(frac, 0.3015);
  EXPECT_LE((ds.A.matrix().transpose() * ds.data - ds.codes).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(ds.A.r(), 100);
}

TEST(SpectralInit, ExactOnCleanData) {
  Rng rng(8);
  const RsrDataset ds = gen_haystack_sphere(12, 8, 100, 0, rng);
  EXPECT_LE(dist_to(spectral_init_dpcp(ds, 4), ds.S_perp), 1e-10);
}

TEST(SpectralInit, BeatsRandomAtDefaultSize) {
  Rng rng(9);
  for (int s = 0; s < 20; ++s) {
    Rng data = rng.split(static_cast<std::uint64_t>(s));
    const RsrDataset ds = gen_haystack_sphere(100, 90, 1500, 3500, data);
    const double spec = dist_to(spectral_init_dpcp(ds, 10), ds.S_perp);
    const double rand = dist_to(random_init(100, 10, data), ds.S_perp);
    EXPECT_LT(spec, rand) << s;
  }
}

TEST(SpectralInit, RankDeficientDataIsFeasible) {
  Rng rng(10);
  const Matrix data = gaussian_matrix(6, 2, rng) * gaussian_matrix(2, 20, rng);
  const StiefelPoint<double> X = spectral_init_dpcp(data, 3);
  EXPECT_LE(feasibility_error(X.matrix()), 1e-12);
  EXPECT_LE((X.matrix().transpose() * data).norm(), 1e-10);
}

TEST(RandomInit, Feasible) {
  Rng rng(11);
  for (int t = 0; t < 10; ++t) EXPECT_LE(feasibility_error(random_init(30, 7, rng).matrix()), 1e-12);
}
