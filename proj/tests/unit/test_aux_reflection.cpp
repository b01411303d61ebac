#include <gtest/gtest.h>

#include <cmath>

#include "auxref/aux_reflection.hpp"
#include "auxref/errors.hpp"
#include "auxref/householder.hpp"
#include "auxref/invertible.hpp"
#include "oracles.hpp"

namespace auxref {
namespace {

DenseMatrix diag(std::initializer_list<double> d) {
  const std::vector<double> v(d);
  return DenseMatrix::diagonal(v);
}

double rel_fd_error(const DenseMatrix& analytic, const DenseMatrix& fd) {
  return max_abs_diff(analytic, fd) / std::max(1.0, max_abs(fd));
}

TEST(Forward, Examples) {
  const AuxReflection id(DenseMatrix::identity(3));
  EXPECT_LE(max_abs_diff(id.forward(DenseVector{1, -2, 0.5}), DenseVector{-1, 2, -0.5}), 1e-15);

  DenseMatrix w(2, 2);
  w(0, 0) = 2.0;
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_LE(max_abs_diff(AuxReflection(w).forward(DenseVector{s, s}), DenseVector{-s, s}), 1e-15);

  // x - (4.4 / 2.44) (1, 1.2), evaluated by hand.
  const DenseVector y = AuxReflection(diag({1, 1.2})).forward(DenseVector{1, 1});
  EXPECT_NEAR(y[0], -0.80327868852459016, 1e-15);
  EXPECT_NEAR(y[1], -1.16393442622950820, 1e-15);
}

TEST(Forward, MatchesDenseOracle) {
  SeededRng rng(1);
  for (std::size_t d : {2u, 5u, 16u}) {
    const DenseMatrix w = random_gaussian_matrix(d, d, rng);
    const DenseVector x = random_gaussian_vector(d, rng);
    EXPECT_LE(max_abs_diff(AuxReflection(w).forward(x), oracle::dense_forward(w, x)),
              1e-13 * norm(x.span()));
  }
}

TEST(Forward, DegenerateConventions) {
  const AuxReflection layer(diag({1, 2}));
  EXPECT_EQ(layer.forward(DenseVector{0, 0}).values(), (std::vector<double>{0, 0}));
  EXPECT_TRUE(layer.is_degenerate(DenseVector{0, 0}));

  // Wx = 0 for x in the kernel of W: f(x) = x.
  const AuxReflection singular(DenseMatrix::from_rows({{1, -1}, {1, -1}}));
  EXPECT_EQ(singular.forward(DenseVector{3, 3}).values(), (std::vector<double>{3, 3}));
  EXPECT_TRUE(singular.is_degenerate(DenseVector{3, 3}));
  EXPECT_THROW(singular.jacobian(DenseVector{3, 3}), DegenerateReflection);
  EXPECT_THROW(layer.jacobian(DenseVector{0, 0}), DegenerateReflection);
  EXPECT_THROW(layer.log_abs_det_jacobian(DenseVector{0, 0}), DegenerateReflection);

  // Fixed points of U survive the W = I - U construction.
  const DenseMatrix u = materialize(ReflectionVector(DenseVector{1, 0, 0}));
  const AuxReflection rep = AuxReflection::from_orthogonal(u);
  EXPECT_EQ(rep.forward(DenseVector{0, 2, -1}).values(), (std::vector<double>{0, 2, -1}));
}

TEST(Forward, DimensionAndConstructionErrors) {
  EXPECT_THROW(AuxReflection(DenseMatrix(2, 3)), DimensionMismatch);
  EXPECT_THROW(AuxReflection(DenseMatrix::identity(2)).forward(DenseVector{1, 2, 3}),
               DimensionMismatch);
}

TEST(ForwardBatch, Examples) {
  SeededRng rng(2);
  const DenseMatrix x = random_gaussian_matrix(6, 10, rng);
  const DenseMatrix y = AuxReflection(DenseMatrix::identity(6)).forward_batch(x);
  EXPECT_LE(max_abs_diff(y, -1.0 * x), 1e-15);

  const DenseMatrix w = random_gaussian_matrix(6, 6, rng);
  const AuxReflection layer(w);
  const DenseMatrix one = random_gaussian_matrix(6, 1, rng);
  EXPECT_EQ(layer.forward_batch(one).column(0).values(), layer.forward(one.column(0)).values());

  const DenseMatrix u = random_orthogonal(8, rng);
  const DenseMatrix x8 = random_gaussian_matrix(8, 32, rng);
  EXPECT_LE(max_abs_diff(AuxReflection::from_orthogonal(u).forward_batch(x8), matmul(u, x8)),
            1e-10);
}

TEST(ForwardBatch, BitIdenticalAcrossThreads) {
  SeededRng rng(3);
  const AuxReflection layer(random_gaussian_matrix(12, 12, rng));
  const DenseMatrix x = random_gaussian_matrix(12, 45, rng);
  const DenseMatrix ref = layer.forward_batch(x, 1);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    ASSERT_EQ(ref.column(j).values(), layer.forward(x.column(j)).values());
  }
  for (int t : {2, 4, 7}) {
    const DenseMatrix got = layer.forward_batch(x, t);
    EXPECT_TRUE(std::equal(ref.data().begin(), ref.data().end(), got.data().begin()));
  }
}

TEST(FromOrthogonal, Examples) {
  const DenseMatrix h = materialize(ReflectionVector(DenseVector{1, 0, 0}));
  const AuxReflection a = AuxReflection::from_orthogonal(h);
  DenseMatrix expected_w(3, 3);
  expected_w(0, 0) = 2.0;
  EXPECT_LE(max_abs_diff(a.weights(), expected_w), 1e-15);
  EXPECT_LE(max_abs_diff(a.forward(DenseVector{1, 2, 3}), DenseVector{-1, 2, 3}), 1e-15);

  const AuxReflection neg = AuxReflection::from_orthogonal(-1.0 * DenseMatrix::identity(4));
  EXPECT_LE(max_abs_diff(neg.weights(), 2.0 * DenseMatrix::identity(4)), 0.0);
  EXPECT_LE(max_abs_diff(neg.forward(DenseVector{1, 2, 3, 4}), DenseVector{-1, -2, -3, -4}),
            1e-15);

  SeededRng rng(4);
  const ReflectionChain chain = random_chain(16, 5, rng);
  const AuxReflection layer = AuxReflection::from_orthogonal(materialize(chain));
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const DenseVector x = random_gaussian_vector(16, rng);
    worst = std::max(worst,
                     norm((layer.forward(x) - chain_apply(chain, x)).span()) / norm(x.span()));
  }
  EXPECT_LE(worst, 1e-10);

  EXPECT_THROW(AuxReflection::from_orthogonal(diag({1, 2})), NotOrthogonal);
}

TEST(Jacobian, Examples) {
  const auto p = AuxReflection(DenseMatrix::identity(3)).jacobian(DenseVector{1, 2, -1});
  EXPECT_LE(max_abs_diff(p.J, -1.0 * DenseMatrix::identity(3)), 1e-15);
  EXPECT_LE(max_abs_diff(p.A, -1.0 * DenseMatrix::identity(3)), 1e-15);

  const DenseMatrix w = diag({1, 1.2});
  const AuxReflection layer(w);
  const DenseVector x{1, 0};
  EXPECT_LE(max_abs_diff(layer.forward(x), DenseVector{-1, 0}), 1e-15);
  const auto fd = oracle::central_jacobian([&](const DenseVector& z) { return layer.forward(z); },
                                           x, 1e-5);
  EXPECT_LE(rel_fd_error(layer.jacobian(x).J, fd), 1e-6);

  SeededRng rng(5);
  const DenseMatrix wr = oracle::uniform_matrix(4, 4, -1, 1, rng);
  const DenseVector xr = oracle::uniform_vector(4, -1, 1, rng);
  const AuxReflection lr(wr);
  const double h = 1e-5 * std::max(1.0, norm(xr.span()));
  const auto fdr =
      oracle::central_jacobian([&](const DenseVector& z) { return lr.forward(z); }, xr, h);
  EXPECT_LE(rel_fd_error(lr.jacobian(xr).J, fdr), 1e-6);
}

TEST(Jacobian, PartsAreConsistent) {
  SeededRng rng(6);
  const DenseMatrix w = random_gaussian_matrix(7, 7, rng);
  const DenseVector x = random_gaussian_vector(7, rng);
  const auto p = AuxReflection(w).jacobian(x);
  EXPECT_LE(max_abs_diff(p.u, matvec(w, x)), 0.0);
  EXPECT_LE(max_abs_diff(p.A, DenseMatrix::identity(7) - p.c * w), 1e-14);
  EXPECT_NEAR(p.c, 2.0 * dot(x.span(), p.u.span()) / squared_norm(p.u.span()), 1e-14);
  EXPECT_LE(max_abs_diff(p.J, oracle::dense_jacobian(w, x)), 1e-12 * max_abs(p.J));
}

TEST(LogAbsDet, Examples) {
  for (std::size_t d : {2u, 3u, 4u, 5u}) {
    const AuxReflection id(DenseMatrix::identity(d));
    const auto r = id.log_abs_det_jacobian(DenseVector::unit(d, 0) + DenseVector::unit(d, d - 1));
    EXPECT_NEAR(r.logabsdet, 0.0, 1e-14);
    EXPECT_EQ(r.sign, d % 2 == 0 ? 1 : -1);
  }

  SeededRng rng(7);
  const DenseMatrix v = random_gaussian_matrix(8, 8, rng);
  AuxReflection layer = build_weights(v).layer();
  const DenseVector x = random_gaussian_vector(8, rng);
  const double direct = oracle::laplace_det(layer.jacobian(x).J);
  const auto r = layer.log_abs_det_jacobian(x, DetPath::kLu);
  EXPECT_NEAR(r.logabsdet, std::log(std::abs(direct)), 1e-8 * std::max(1.0, std::abs(r.logabsdet)));
  EXPECT_EQ(r.sign, direct > 0 ? 1 : -1);

  layer.enable_symmetric_fast_path();
  EXPECT_TRUE(layer.has_symmetric_fast_path());
  const auto s = layer.log_abs_det_jacobian(x, DetPath::kSymmetric);
  EXPECT_NEAR(s.logabsdet, r.logabsdet, 1e-10);
  EXPECT_EQ(s.sign, r.sign);
}

TEST(LogAbsDet, SingularAAndPathErrors) {
  // x = e1: u = e1, c = 2, A = I - 2 diag(1, 0.5) = diag(-1, 0).
  const AuxReflection layer(diag({1, 0.5}));
  EXPECT_THROW(layer.log_abs_det_jacobian(DenseVector{1, 0}, DetPath::kLu), SingularA);

  AuxReflection asym(DenseMatrix::from_rows({{1, 2}, {0, 1}}));
  EXPECT_THROW(asym.enable_symmetric_fast_path(), NotSymmetric);
  EXPECT_THROW(asym.log_abs_det_jacobian(DenseVector{1, 1}, DetPath::kSymmetric), InvalidArgument);
}

TEST(VjpX, Examples) {
  const AuxReflection id(DenseMatrix::identity(4));
  const DenseVector g{1, -2, 3, 0.5};
  EXPECT_LE(max_abs_diff(id.vjp_x(DenseVector{1, 1, 0, 2}, g), -1.0 * g), 1e-15);
  EXPECT_EQ(id.vjp_x(DenseVector{1, 1, 0, 2}, DenseVector(4)).values(),
            std::vector<double>(4, 0.0));

  SeededRng rng(8);
  const DenseMatrix w = random_gaussian_matrix(8, 8, rng);
  const DenseVector x = random_gaussian_vector(8, rng);
  const DenseVector gr = random_gaussian_vector(8, rng);
  const DenseVector expected = matvec_transposed(oracle::dense_jacobian(w, x), gr);
  EXPECT_LE(max_abs_diff(AuxReflection(w).vjp_x(x, gr), expected), 1e-10);
}

TEST(VjpW, Examples) {
  SeededRng rng(9);
  const DenseMatrix w = random_gaussian_matrix(4, 4, rng);
  const DenseVector x = random_gaussian_vector(4, rng);
  EXPECT_EQ(max_abs(AuxReflection(w).vjp_w(x, DenseVector(4))), 0.0);

  // x an eigenvector of W: moving along W -> W + eps I leaves g^T f unchanged.
  const DenseMatrix we = diag({1, 1.2, 0.7});
  const DenseVector xe{0, 2, 0};
  const DenseVector ge{0.3, -1, 2};
  const DenseMatrix gw = AuxReflection(we).vjp_w(xe, ge);
  double directional = 0.0;
  for (std::size_t i = 0; i < 3; ++i) directional += gw(i, i);
  EXPECT_NEAR(directional, 0.0, 1e-6);
  const double eps = 1e-5;
  const double lp =
      dot(ge.span(), oracle::dense_forward(we + eps * DenseMatrix::identity(3), xe).span());
  const double lm =
      dot(ge.span(), oracle::dense_forward(we - eps * DenseMatrix::identity(3), xe).span());
  EXPECT_NEAR((lp - lm) / (2 * eps), 0.0, 1e-6);

  const DenseVector g = random_gaussian_vector(4, rng);
  const DenseMatrix analytic = AuxReflection(w).vjp_w(x, g);
  const DenseMatrix fd = oracle::central_weight_gradient(w, x, g);
  for (std::size_t i = 0; i < 16; ++i) {
    const double ref = fd.data()[i];
    if (std::abs(ref) <= 1e-8) continue;
    EXPECT_LE(std::abs(analytic.data()[i] - ref) / std::abs(ref), 1e-5) << "entry " << i;
  }
}

TEST(VjpW, OrthogonalToWeights) {
  // g^T f(x; sW) does not depend on s, so <dL/dW, W> = 0.
  SeededRng rng(10);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix w = random_gaussian_matrix(6, 6, rng);
    const DenseVector x = random_gaussian_vector(6, rng);
    const DenseVector g = random_gaussian_vector(6, rng);
    const DenseMatrix gw = AuxReflection(w).vjp_w(x, g);
    EXPECT_NEAR(dot(gw.data(), w.data()), 0.0, 1e-12 * max_abs(gw) * max_abs(w) * 36);
  }
}

// ---- properties ------------------------------------------------------------

class AuxSweep : public ::testing::TestWithParam<std::size_t> {};

TEST_P(AuxSweep, RepresentsAnyChain) {
  const std::size_t d = GetParam();
  SeededRng rng(300 + d);
  for (std::size_t k : {std::size_t{1}, std::size_t{3}, d}) {
    const ReflectionChain chain = random_chain(d, k, rng);
    const DenseMatrix u = materialize(chain);
    const AuxReflection layer = AuxReflection::from_orthogonal(u);
    for (int t = 0; t < 100; ++t) {
      const DenseVector x = random_gaussian_vector(d, rng);
      ASSERT_LE(norm((layer.forward(x) - matvec(u, x)).span()), 1e-10 * norm(x.span()))
          << "k=" << k;
    }
  }
}

TEST_P(AuxSweep, IsometryAndHomogeneity) {
  const std::size_t d = GetParam();
  SeededRng rng(400 + d);
  const AuxReflection layer(random_gaussian_matrix(d, d, rng));
  for (int t = 0; t < 100; ++t) {
    const DenseVector x = random_gaussian_vector(d, rng);
    const DenseVector fx = layer.forward(x);
    const double nx = norm(x.span());
    ASSERT_NEAR(norm(fx.span()), nx, 1e-12 * nx);
    for (double c : {-2.0, 0.5, 10.0}) {
      ASSERT_LE(norm((layer.forward(c * x) - c * fx).span()), 1e-12 * std::abs(c) * nx);
    }
  }
}

TEST_P(AuxSweep, OrthogonalCaseUnitDeterminant) {
  const std::size_t d = GetParam();
  SeededRng rng(500 + d);
  const AuxReflection layer = AuxReflection::from_orthogonal(random_orthogonal(d, rng));
  for (int t = 0; t < 20; ++t) {
    const DenseVector x = random_gaussian_vector(d, rng);
    const double det = lu_det(layer.jacobian(x).J);
    EXPECT_NEAR(std::abs(det), 1.0, 1e-8);
  }
}

INSTANTIATE_TEST_SUITE_P(Dims, AuxSweep, ::testing::Values(2, 4, 8, 16, 32, 64));

class JacobianSweep : public ::testing::TestWithParam<std::size_t> {};

TEST_P(JacobianSweep, FormulaMatchesFiniteDifferencesAndDeterminant) {
  const std::size_t d = GetParam();
  SeededRng rng(600 + d);
  for (int t = 0; t < 50; ++t) {
    const DenseMatrix w = oracle::uniform_matrix(d, d, -1, 1, rng);
    const DenseVector x = oracle::uniform_vector(d, -1, 1, rng);
    const AuxReflection layer(w);
    const double h = 1e-5 * std::max(1.0, norm(x.span()));
    const auto fd =
        oracle::central_jacobian([&](const DenseVector& z) { return layer.forward(z); }, x, h);
    const auto parts = layer.jacobian(x);
    ASSERT_LE(rel_fd_error(parts.J, fd), 1e-6) << "trial " << t;

    const LuFactorization lu(parts.J);
    LogAbsDet lemma{};
    try {
      lemma = layer.log_abs_det_jacobian(x, DetPath::kLu);
    } catch (const SingularA&) {
      continue;
    }
    ASSERT_NEAR(lemma.logabsdet, lu.log_abs_determinant(),
                1e-8 * std::max(1.0, std::abs(lu.log_abs_determinant())));
    ASSERT_EQ(lemma.sign, lu.determinant_sign());
  }
}

TEST_P(JacobianSweep, SymmetricPathAgreesWithLu) {
  const std::size_t d = GetParam();
  SeededRng rng(700 + d);
  AuxReflection layer(oracle::random_symmetric(d, rng));
  layer.enable_symmetric_fast_path();
  for (int t = 0; t < 50; ++t) {
    const DenseVector x = random_gaussian_vector(d, rng);
    try {
      const auto a = layer.log_abs_det_jacobian(x, DetPath::kLu);
      const auto b = layer.log_abs_det_jacobian(x, DetPath::kSymmetric);
      ASSERT_NEAR(a.logabsdet, b.logabsdet, 1e-10 * std::max(1.0, std::abs(a.logabsdet)));
      ASSERT_EQ(a.sign, b.sign);
    } catch (const SingularA&) {
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Dims, JacobianSweep, ::testing::Values(2, 4, 8, 16));

}  // namespace
}  // namespace auxref
