#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "oqs/spectral.hpp"
#include "test_support.hpp"

using namespace oqs;
using oqs::testing::I;

namespace {

std::vector<cplx> values_of(const EigenSystem& es) {
  std::vector<cplx> v;
  for (const auto& r : es.eigenvalues) v.push_back(r.value);
  return v;
}

CMatrix near_ep(double d) {
  CMatrix h = oqs::testing::ep_fixture();
  h(1, 1) += d;
  return h;
}

} // namespace

TEST(Eigendecompose, DiagonalMatrix) {
  CMatrix h = CMatrix::Zero(2, 2);
  h(1, 1) = 1.0;
  auto es = eigendecompose(h);
  EXPECT_EQ(es.value(0), cplx(0.0));
  EXPECT_EQ(es.value(1), cplx(1.0));
  EXPECT_LT((es.right_vectors - CMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Eigendecompose, DiagonalLargerMatrixKeepsBasis) {
  CMatrix h = CMatrix::Zero(5, 5);
  for (int k = 0; k < 5; ++k) h(k, k) = cplx(k, -0.1 * k);
  auto es = eigendecompose(h);
  for (int k = 0; k < 5; ++k) {
    EXPECT_NEAR(std::abs(es.value(k) - h(k, k)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(es.right_vectors(k, k)), 1.0, 1e-12);
  }
}

TEST(Eigendecompose, EpFixtureDoubleEigenvalue) {
  auto es = eigendecompose(oqs::testing::ep_fixture());
  ASSERT_EQ(es.size(), 2);
  EXPECT_NEAR(std::abs(es.value(0) - 0.5 * I), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(es.value(1) - 0.5 * I), 0.0, 1e-10);
}

TEST(Eigendecompose, ThreeByThreeMatchesCubicOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    CMatrix h = oqs::testing::random_complex_symmetric(3, rng);
    auto es = eigendecompose(h);
    EXPECT_LT(oqs::testing::multiset_distance(values_of(es), oqs::testing::charpoly_roots(h)), 1e-9) << "trial " << trial;
  }
}

TEST(Eigendecompose, AgreesWithEigenLibrary) {
  std::mt19937_64 rng(5);
  for (int n : {4, 6, 10, 20, 40}) {
    CMatrix h = oqs::testing::random_complex_symmetric(n, rng);
    auto es = eigendecompose(h);
    Eigen::ComplexEigenSolver<CMatrix> ref(h);
    std::vector<cplx> other(ref.eigenvalues().data(), ref.eigenvalues().data() + n);
    // greedy pairing is enough for generic well-separated spectra
    for (const auto& v : values_of(es)) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& w : other) best = std::min(best, std::abs(v - w));
      EXPECT_LT(best, 1e-9 * h.norm()) << "n=" << n;
    }
  }
}

TEST(Eigendecompose, ResidualTraceAndDeterminant) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 11;
    CMatrix h = oqs::testing::random_complex_symmetric(n, rng);
    auto es = eigendecompose(h);
    cplx tr{}, det{1.0};
    for (int i = 0; i < n; ++i) {
      EXPECT_LE(es.residuals[i], 1e-10 * es.h_norm);
      EXPECT_LE((h * es.vector(i) - es.value(i) * es.vector(i)).norm(), 1e-10 * es.h_norm);
      EXPECT_NEAR(es.vector(i).norm(), 1.0, 1e-12);
      tr += es.value(i);
      det *= es.value(i);
    }
    EXPECT_LT(std::abs(tr - h.trace()), 1e-10 * h.norm());
    const cplx ref = h.determinant();
    EXPECT_LT(std::abs(det - ref), 1e-8 * std::max(1.0, std::abs(ref)));
  }
}

TEST(Eigendecompose, SortedByRealThenImaginary) {
  std::mt19937_64 rng(21);
  auto es = eigendecompose(oqs::testing::random_complex_symmetric(8, rng));
  for (int i = 1; i < es.size(); ++i) EXPECT_LE(es.value(i - 1).real(), es.value(i).real());
}

TEST(Eigendecompose, WidthAndLifetime) {
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 0) = cplx(1.0, -0.25);
  h(1, 1) = 2.0;
  auto es = eigendecompose(h, WidthSign::physical_minus);
  EXPECT_DOUBLE_EQ(es.eigenvalues[0].width, 0.5);
  EXPECT_DOUBLE_EQ(es.eigenvalues[0].lifetime, 2.0);
  EXPECT_TRUE(std::isinf(es.eigenvalues[1].lifetime));
  es = eigendecompose(h, WidthSign::paper_plus);
  EXPECT_DOUBLE_EQ(es.eigenvalues[0].width, -0.5);
}

TEST(Eigendecompose, Errors) {
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 1) = NAN;
  EXPECT_THROW(eigendecompose(h), NumericalError);
  EXPECT_THROW(eigendecompose(CMatrix::Zero(2, 3)), SpecError);
  EXPECT_THROW(eigendecompose(CMatrix::Zero(0, 0)), SpecError);
}

TEST(Biorthonormalize, IdentityUnchanged) {
  auto es = biorthonormalize(eigendecompose(CMatrix::Identity(3, 3) * 1.0));
  EXPECT_LT((es.right_vectors - CMatrix::Identity(3, 3)).norm(), 1e-15);
  for (bool f : es.self_orthogonal) EXPECT_FALSE(f);
  EXPECT_EQ(es.normalization, Normalization::biorthogonal);
}

TEST(Biorthonormalize, EpFixtureFlagged) {
  auto es = biorthonormalize(eigendecompose(oqs::testing::ep_fixture()));
  EXPECT_TRUE(es.self_orthogonal[0]);
  EXPECT_TRUE(es.self_orthogonal[1]);
  // eigenvector is proportional to (1, i)
  const CVector v = es.vector(0);
  EXPECT_LT(std::abs(v(1) - I * v(0)), 1e-7);
}

TEST(Biorthonormalize, NearEpLargeEm) {
  auto es = biorthonormalize(eigendecompose(near_ep(1e-3)));
  for (int i = 0; i < 2; ++i) {
    EXPECT_FALSE(es.self_orthogonal[i]);
    const cplx tt = es.vector(i).transpose() * es.vector(i);
    EXPECT_NEAR(std::abs(tt - 1.0), 0.0, 1e-10);
    EXPECT_GT(es.vector(i).squaredNorm(), 10.0);
  }
}

TEST(Biorthonormalize, BiorthogonalAndIdempotent) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 9;
    auto once = biorthonormalize(eigendecompose(oqs::testing::random_complex_symmetric(n, rng)));
    const CMatrix g = once.right_vectors.transpose() * once.right_vectors;
    EXPECT_LT((g - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8);
    auto twice = biorthonormalize(once);
    // idempotent up to the sign ambiguity of the complex square root
    for (int i = 0; i < n; ++i) {
      const cplx ratio = twice.vector(i).dot(once.vector(i)) / once.vector(i).squaredNorm();
      EXPECT_NEAR(std::abs(ratio), 1.0, 1e-10);
      EXPECT_NEAR(std::abs(std::abs(ratio.real()) - 1.0), 0.0, 1e-10);
    }
  }
}

TEST(Biorthonormalize, PhaseInvariant) {
  std::mt19937_64 rng(41);
  auto es = eigendecompose(oqs::testing::random_complex_symmetric(4, rng));
  auto a = biorthonormalize(es);
  for (int i = 0; i < 4; ++i) es.right_vectors.col(i) *= std::polar(2.0, 0.3 + i);
  auto b = biorthonormalize(es);
  for (int i = 0; i < 4; ++i) {
    // same up to sign
    const double d = std::min((a.vector(i) - b.vector(i)).norm(), (a.vector(i) + b.vector(i)).norm());
    EXPECT_LT(d, 1e-10);
  }
}

TEST(MinGap, FindsClosestPair) {
  CMatrix h = CMatrix::Zero(3, 3);
  h(0, 0) = 0.0;
  h(1, 1) = 1.0;
  h(2, 2) = 1.1;
  auto g = min_gap(eigendecompose(h));
  EXPECT_NEAR(g.gap, 0.1, 1e-14);
  EXPECT_EQ(g.i, 1);
  EXPECT_EQ(g.j, 2);
}
