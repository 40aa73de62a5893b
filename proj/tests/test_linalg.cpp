#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace hetpca;
using testing_support::gaussian_matrix;
using testing_support::projector_gap;
using testing_support::random_orthogonal;
using testing_support::random_symmetric;
using testing_support::span_of;

namespace {

Basis random_basis(std::size_t d, std::size_t k, rng::Stream& s) { return haar_basis(d, k, s); }

}  // namespace

TEST(TopKEigen, DiagonalMatrix) {
  Matrix a = Vector::LinSpaced(3, 3.0, 1.0).asDiagonal();
  const auto r = top_k_eigen(a, 2);
  ASSERT_EQ(r.values.size(), 2u);
  EXPECT_DOUBLE_EQ(r.values[0], 3.0);
  EXPECT_DOUBLE_EQ(r.values[1], 2.0);
  EXPECT_NEAR(r.gap, 1.0, 1e-14);
  EXPECT_LE(max_principal_angle_sin(r.vectors, span_of({{1, 0, 0}, {0, 1, 0}})), 1e-14);
}

TEST(TopKEigen, IdentityHasZeroGap) {
  const auto r = top_k_eigen(Matrix::Identity(3, 3), 1);
  EXPECT_DOUBLE_EQ(r.values[0], 1.0);
  EXPECT_NEAR(r.gap, 0.0, 1e-15);
}

TEST(TopKEigen, TwoByTwoSwap) {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const auto r = top_k_eigen(a, 1);
  EXPECT_NEAR(r.values[0], 1.0, 1e-14);
  EXPECT_NEAR(r.gap, 2.0, 1e-14);
  EXPECT_NEAR(r.vectors.matrix()(0, 0), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(r.vectors.matrix()(1, 0), 1.0 / std::sqrt(2.0), 1e-14);
}

TEST(TopKEigen, AlgebraicOrderRanksNegativeLast) {
  Matrix a = Vector::LinSpaced(3, -5.0, 1.0).asDiagonal();  // -5, -2, 1
  const auto r = top_k_eigen(a, 1);
  EXPECT_DOUBLE_EQ(r.values[0], 1.0);
}

TEST(TopKEigen, Errors) {
  EXPECT_THROW(top_k_eigen(Matrix::Identity(3, 3), 3), DimensionError);
  EXPECT_THROW(top_k_eigen(Matrix::Identity(3, 3), 0), DimensionError);
  EXPECT_THROW(top_k_eigen(Matrix::Zero(3, 2), 1), DimensionError);
  Matrix bad = Matrix::Identity(3, 3);
  bad(1, 2) = std::nan("");
  EXPECT_THROW(top_k_eigen(bad, 1), InputError);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 0.5;
  EXPECT_THROW(top_k_eigen(asym, 1), InputError);
}

TEST(TopKEigen, ToleratesRoundoffAsymmetry) {
  Matrix a = Matrix::Identity(3, 3);
  a(0, 0) = 2.0;
  a(0, 1) = 1e-13;
  EXPECT_NO_THROW(top_k_eigen(a, 1));
}

TEST(TopKEigen, SignConventionIsDeterministic) {
  Matrix a(3, 3);
  a << 2, 0, 0, 0, 1, 0, 0, 0, 0;
  Matrix b = a;
  const auto r1 = top_k_eigen(a, 2);
  const auto r2 = top_k_eigen(b, 2);
  EXPECT_EQ(r1.vectors.matrix(), r2.vectors.matrix());
  for (Eigen::Index c = 0; c < 2; ++c) {
    const Vector v = r1.vectors.matrix().col(c);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::abs(v(i)) > 1e-12) {
        EXPECT_GT(v(i), 0.0);
        break;
      }
    }
  }
}

TEST(TopKEigen, ResidualAndOrthonormalityUpToD200) {
  auto s = rng::stream_for(11);
  for (std::size_t d : {2u, 5u, 17u, 64u, 200u}) {
    const Matrix a = random_symmetric(static_cast<Eigen::Index>(d), s);
    const std::size_t k = std::max<std::size_t>(1, d / 3);
    const auto r = top_k_eigen(a, k);
    const double norm = spectral_norm_symmetric(a);
    const Matrix& v = r.vectors.matrix();
    EXPECT_LE((v.transpose() * v - Matrix::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-10);
    for (std::size_t i = 0; i < k; ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      EXPECT_LE((a * v.col(c) - r.values[i] * v.col(c)).norm(), 1e-8 * std::max(1.0, norm));
      if (i + 1 < k) {
        EXPECT_GE(r.values[i], r.values[i + 1] - 1e-12);
      }
    }
  }
}

TEST(Basis, RejectsBadShapesAndNonOrthonormal) {
  EXPECT_THROW(Basis(Matrix::Identity(3, 3)), DimensionError);
  Matrix m = Matrix::Zero(3, 1);
  m(0, 0) = 2.0;
  EXPECT_THROW(Basis{m}, InputError);
  EXPECT_THROW(Basis::orthonormalize(Matrix::Zero(3, 1)), RankDeficientError);
}

TEST(MaxAngle, Examples) {
  EXPECT_DOUBLE_EQ(max_principal_angle_sin(span_of({{1, 0, 0}}), span_of({{1, 0, 0}})), 0.0);
  EXPECT_NEAR(max_principal_angle_sin(span_of({{1, 0, 0}}), span_of({{0, 1, 0}})), 1.0, 1e-15);
  const double c = std::cos(std::numbers::pi / 4), s = std::sin(std::numbers::pi / 4);
  const auto b1 = span_of({{1, 0, 0}});
  const auto b2 = span_of({{c, s, 0}});
  EXPECT_NEAR(max_principal_angle_sin(b1, b2), s, 1e-10);
  EXPECT_NEAR(projector_gap(b1, b2), s, 1e-10);
}

TEST(MaxAngle, Errors) {
  EXPECT_THROW(max_principal_angle_sin(span_of({{1, 0, 0}}), span_of({{1, 0, 0, 0}})),
               DimensionError);
  EXPECT_THROW(max_principal_angle_sin(span_of({{1, 0, 0}}), span_of({{1, 0, 0}, {0, 1, 0}})),
               DimensionError);
}

TEST(MaxAngle, MetricAxioms) {
  auto s = rng::stream_for(21);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t d = 3 + static_cast<std::size_t>(t % 6);
    const std::size_t k = 1 + static_cast<std::size_t>(t % (d - 1));
    const auto a = random_basis(d, k, s);
    const auto b = random_basis(d, k, s);
    const auto c = random_basis(d, k, s);
    const double ab = max_principal_angle_sin(a, b);
    const double ba = max_principal_angle_sin(b, a);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_LE(max_principal_angle_sin(a, c), ab + max_principal_angle_sin(b, c) + 1e-12);
    if (t % 100 == 0) {
      EXPECT_LE(max_principal_angle_sin(a, a), 1e-9);
    }
  }
}

TEST(MaxAngle, ZeroOnlyForEqualSubspaces) {
  auto s = rng::stream_for(22);
  const auto a = random_basis(6, 2, s);
  const Basis rotated(a.matrix() * random_orthogonal(2, s));
  EXPECT_LE(max_principal_angle_sin(a, rotated), 1e-9);
  const auto b = random_basis(6, 2, s);
  EXPECT_GT(max_principal_angle_sin(a, b), 1e-9);
}

TEST(MaxAngle, RotationInvariance) {
  auto s = rng::stream_for(23);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_basis(9, 3, s);
    const auto b = random_basis(9, 3, s);
    const Basis ar(a.matrix() * random_orthogonal(3, s));
    const Basis br(b.matrix() * random_orthogonal(3, s));
    EXPECT_NEAR(max_principal_angle_sin(ar, b), max_principal_angle_sin(a, b), 1e-12);
    EXPECT_NEAR(max_principal_angle_sin(a, br), max_principal_angle_sin(a, b), 1e-12);
  }
}

TEST(MaxAngle, ThreeFormulasAgree) {
  auto s = rng::stream_for(24);
  for (int t = 0; t < 500; ++t) {
    const std::size_t d = 4 + static_cast<std::size_t>(t % 8);
    const std::size_t k = 1 + static_cast<std::size_t>(t % (d / 2));
    const auto a = random_basis(d, k, s);
    const auto b = random_basis(d, k, s);
    // Complements from a full QR.
    auto complement = [&](const Basis& x) {
      Eigen::HouseholderQR<Matrix> qr(x.matrix());
      const Matrix q = qr.householderQ() * Matrix::Identity(d, d);
      return Matrix(q.rightCols(static_cast<Eigen::Index>(d - k)));
    };
    const Matrix a2 = complement(a);
    const Matrix b2 = complement(b);
    Eigen::JacobiSVD<Matrix> s1(a.matrix().transpose() * b2);
    Eigen::JacobiSVD<Matrix> s2(a2.transpose() * b.matrix());
    const double proj = projector_gap(a, b);
    EXPECT_NEAR(proj, s1.singularValues().maxCoeff(), 1e-9);
    EXPECT_NEAR(proj, s2.singularValues().maxCoeff(), 1e-9);
    EXPECT_NEAR(proj, max_principal_angle_sin(a, b), 1e-9);
  }
}

TEST(AllAngles, Examples) {
  const auto p = span_of({{1, 0, 0, 0}, {0, 1, 0, 0}});
  for (double x : all_principal_angles(p, p)) EXPECT_NEAR(x, 0.0, 1e-14);
  const auto q = span_of({{1, 0, 0, 0}, {0, 0, 1, 0}});
  const auto ang = all_principal_angles(p, q);
  ASSERT_EQ(ang.size(), 2u);
  EXPECT_NEAR(ang[0], 0.0, 1e-14);
  EXPECT_NEAR(ang[1], std::numbers::pi / 2, 1e-14);
}

TEST(AllAngles, FrobeniusIdentityAndMaxAngle) {
  auto s = rng::stream_for(25);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_basis(6, 2, s);
    const auto b = random_basis(6, 2, s);
    const auto ang = all_principal_angles(a, b);
    ASSERT_EQ(ang.size(), 2u);
    EXPECT_LE(ang[0], ang[1]);
    double sum = 0.0;
    for (double x : ang) sum += std::sin(x) * std::sin(x);
    EXPECT_NEAR(projection_distance_frobenius(a, b), std::sqrt(2.0 * sum), 1e-9);
    EXPECT_NEAR(ang.back(), std::asin(max_principal_angle_sin(a, b)), 1e-9);
  }
}

TEST(AllAngles, UnequalDimensions) {
  const auto line = span_of({{1, 1, 0, 0}});
  const auto plane = span_of({{1, 0, 0, 0}, {0, 1, 0, 0}});
  const auto ang = all_principal_angles(line, plane);
  ASSERT_EQ(ang.size(), 1u);
  EXPECT_NEAR(ang[0], 0.0, 1e-12);
  EXPECT_THROW(all_principal_angles(plane, line), DimensionError);
  EXPECT_THROW(all_principal_angles(line, span_of({{1, 0, 0}})), DimensionError);
}

TEST(AllAngles, SmallAnglesStayAccurate) {
  const double eps = 1e-9;
  const auto a = span_of({{1, 0, 0}});
  const auto b = span_of({{std::cos(eps), std::sin(eps), 0}});
  EXPECT_NEAR(all_principal_angles(a, b)[0], eps, 1e-15);
}

TEST(DavisKahan, Examples) {
  Matrix a = Vector::LinSpaced(3, 2.0, 0.0).asDiagonal();
  EXPECT_DOUBLE_EQ(davis_kahan_bound(a, a, 1), 0.0);
  Matrix e = Matrix::Zero(3, 3);
  e(0, 2) = e(2, 0) = 1.0;
  const Matrix a_hat = a + 0.1 * e;
  const double bound = davis_kahan_bound(a, a_hat, 1);
  EXPECT_NEAR(bound, 0.2, 1e-14);
  const double actual =
      max_principal_angle_sin(top_k_eigen(a, 1).vectors, top_k_eigen(a_hat, 1).vectors);
  EXPECT_LE(actual, bound);
}

TEST(DavisKahan, DegenerateGap) {
  EXPECT_THROW(davis_kahan_bound(Matrix::Identity(3, 3), Matrix::Identity(3, 3), 1),
               DegenerateGapError);
}

TEST(DavisKahan, PropertyNeverViolated) {
  auto s = rng::stream_for(26);
  std::size_t checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 1 + static_cast<std::size_t>(t % 5);
    const Matrix a = random_symmetric(20, s);
    const double scale = std::pow(10.0, -3.0 + 3.0 * s.uniform());
    const Matrix a_hat = a + scale * random_symmetric(20, s);
    double bound = 0.0;
    try {
      bound = davis_kahan_bound(a, a_hat, k);
    } catch (const DegenerateGapError&) {
      continue;
    }
    ++checked;
    const double actual =
        max_principal_angle_sin(top_k_eigen(a, k).vectors, top_k_eigen(a_hat, k).vectors);
    EXPECT_LE(actual, bound + 1e-12) << "case " << t;
  }
  EXPECT_EQ(checked, 1000u);
}

TEST(Haar, OrthonormalColumns) {
  auto s = rng::stream_for(31);
  for (int t = 0; t < 100; ++t) {
    const auto b = haar_basis(12, 4, s);
    EXPECT_LE((b.matrix().transpose() * b.matrix() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(),
              1e-10);
  }
  EXPECT_THROW(haar_basis(3, 3, s), DimensionError);
}

TEST(Haar, SecondMomentIsIsotropic) {
  auto s = rng::stream_for(32);
  Matrix acc = Matrix::Zero(2, 2);
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) {
    const Vector u = haar_basis(2, 1, s).matrix().col(0);
    acc += u * u.transpose();
  }
  acc /= draws;
  EXPECT_LE((acc - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.01);
}

TEST(Haar, LeftInvariance) {
  auto s = rng::stream_for(33);
  const std::size_t d = 5, k = 2, draws = 10000;
  const Matrix g = random_orthogonal(static_cast<Eigen::Index>(d), s);
  const Basis reference(Matrix::Identity(d, k));
  std::vector<double> plain, rotated;
  for (std::size_t t = 0; t < draws; ++t) {
    plain.push_back(max_principal_angle_sin(reference, haar_basis(d, k, s)));
    rotated.push_back(max_principal_angle_sin(reference, Basis(g * haar_basis(d, k, s).matrix())));
  }
  EXPECT_LT(testing_support::ks_statistic(plain, rotated),
            testing_support::ks_critical_01(draws, draws));
}
