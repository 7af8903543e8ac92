#include "test_helpers.hpp"

#include <gtest/gtest.h>

using namespace eikf;
using namespace eikf::test;

namespace {

Tangent9 random_tangent_bounded(std::mt19937_64& rng, double max_angle) {
  Tangent9 x = normal9(rng, 2.0);
  std::uniform_real_distribution<double> u(0.0, max_angle);
  x.head<3>() = normal3(rng).normalized() * u(rng);
  return x;
}

}  // namespace

TEST(So3, ExpOfZeroIsIdentity) { EXPECT_TRUE(so3_exp(Vec3::Zero()).isIdentity(0.0)); }

TEST(So3, ExpQuarterTurnAboutX) {
  Mat3 expected;
  expected << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_LT((so3_exp(Vec3(M_PI / 2, 0, 0)) - expected).norm(), 1e-15);
}

TEST(So3, ExpMatchesMatrixExponential) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vec3 th = normal3(rng).normalized() * 0.3;
    EXPECT_LT((so3_exp(th) - expm(skew(th))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(So3, ExpSmallAngleSeries) {
  const Vec3 th(3e-7, -1e-7, 2e-7);
  EXPECT_LT((so3_exp(th) - expm(skew(th))).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(So3, LogOfIdentityIsZero) { EXPECT_EQ(so3_log(Mat3::Identity()).norm(), 0.0); }

TEST(So3, LogRoundTrip) {
  const Vec3 th(0.1, -0.2, 0.05);
  EXPECT_LT((so3_log(so3_exp(th)) - th).norm(), 1e-14);
}

TEST(So3, LogAtHalfTurnThrows) {
  const Mat3 R = Eigen::AngleAxisd(M_PI, Vec3::UnitX()).toRotationMatrix();
  try {
    so3_log(R);
    FAIL() << "expected AngleAtPi";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AngleAtPi);
  }
}

TEST(So3, LogNearHalfTurnStaysAccurate) {
  const Vec3 th = Vec3(1, 2, -1).normalized() * (M_PI - 1e-4);
  EXPECT_LT((so3_log(so3_exp(th)) - th).norm(), 1e-9);
}

TEST(So3, ProjectionFixesScaledRotation) {
  const Mat3 R = so3_exp(Vec3(0.3, -0.1, 0.7));
  EXPECT_LT((project_to_so3(1.01 * R) - R).norm(), 1e-12);
}

TEST(So3, RollPitchYawComposition) {
  const Mat3 R = rotation_from_rpy(0.1, 0.2, 0.3);
  const Mat3 expected = so3_exp(Vec3(0, 0, 0.3)) * so3_exp(Vec3(0, 0.2, 0)) * so3_exp(Vec3(0.1, 0, 0));
  EXPECT_LT((R - expected).norm(), 1e-14);
}

TEST(Se23, ExpOfZeroIsIdentity) {
  const ExtendedPose X = se23_exp(Tangent9::Zero());
  EXPECT_TRUE(X.R.isIdentity(0.0));
  EXPECT_EQ(X.p.norm() + X.v.norm(), 0.0);
}

TEST(Se23, PureTranslationExp) {
  Tangent9 xi;
  xi << 0, 0, 0, 1, 2, 3, 4, 5, 6;
  const ExtendedPose X = se23_exp(xi);
  EXPECT_TRUE(X.R.isIdentity(0.0));
  EXPECT_EQ(X.p, Vec3(1, 2, 3));
  EXPECT_EQ(X.v, Vec3(4, 5, 6));
}

TEST(Se23, ExpMatchesMatrixExponential) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const Tangent9 xi = normal9(rng, 0.7);
    const MatX E = expm(hat(xi));
    EXPECT_LT((se23_exp(xi).matrix() - E).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Se23, LogOfIdentityIsZero) { EXPECT_EQ(se23_log(ExtendedPose{}).norm(), 0.0); }

TEST(Se23, LogRoundTripUnitAngle) {
  std::mt19937_64 rng(3);
  Tangent9 xi = normal9(rng);
  xi.head<3>() = xi.head<3>().normalized();
  EXPECT_LT((se23_log(se23_exp(xi)) - xi).norm(), 1e-10);
}

TEST(Se23, LogOfPureVelocity) {
  ExtendedPose X;
  X.v = Vec3(1, 0, 0);
  Tangent9 expected = Tangent9::Zero();
  expected(6) = 1.0;
  EXPECT_LT((se23_log(X) - expected).norm(), 1e-15);
}

TEST(Se23, RoundTripThousandCases) {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Tangent9 xi = random_tangent_bounded(rng, M_PI - 0.1);
    worst = std::max(worst, (se23_log(se23_exp(xi)) - xi).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Se23, MatrixFormHasIdentityCorner) {
  std::mt19937_64 rng(5);
  const auto M = random_pose(rng).matrix();
  EXPECT_TRUE((M.bottomRightCorner<2, 2>().isIdentity(0.0)));
  EXPECT_EQ((M.block<2, 3>(3, 0).norm()), 0.0);
}

TEST(Se3, RoundTrip) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    Tangent6 xi = normal9(rng).head<6>();
    xi.head<3>() = xi.head<3>().normalized() * std::fmod(xi.head<3>().norm(), M_PI - 0.1);
    EXPECT_LT((se3_log(se3_exp(xi)) - xi).norm(), 1e-10);
  }
}

TEST(Se3, ExpMatchesMatrixExponential) {
  std::mt19937_64 rng(7);
  const Tangent6 xi = normal9(rng, 0.7).head<6>();
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  h.topLeftCorner<3, 3>() = skew(xi.head<3>());
  h.topRightCorner<3, 1>() = xi.tail<3>();
  const MatX E = expm(h);
  const Pose T = se3_exp(xi);
  EXPECT_LT((T.R - E.topLeftCorner(3, 3)).norm(), 1e-12);
  EXPECT_LT((T.p - E.topRightCorner(3, 1)).norm(), 1e-12);
}

TEST(Adjoint, IdentityGivesIdentity) { EXPECT_TRUE(adjoint(ExtendedPose{}).isIdentity(0.0)); }

TEST(Adjoint, TranslationAlongZActingOnRollRate) {
  ExtendedPose X;
  X.p = Vec3(0, 0, 1);
  Tangent9 y = Tangent9::Zero();
  y(0) = 1;
  Tangent9 expected = Tangent9::Zero();
  expected(0) = 1;
  expected(4) = 1;  // p^ e1 = e3 x e1 = e2
  EXPECT_LT((adjoint(X) * y - expected).norm(), 1e-15);
}

TEST(Adjoint, ConjugationIdentity) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const ExtendedPose X = random_pose(rng);
    const Tangent9 y = normal9(rng, 0.5);
    const auto lhs = se23_exp(adjoint(X) * y).matrix();
    const auto rhs = (X * se23_exp(y) * X.inverse()).matrix();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Adjoint, Homomorphism) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const ExtendedPose X = random_pose(rng);
    const ExtendedPose Y = random_pose(rng);
    EXPECT_LT((adjoint(X * Y) - adjoint(X) * adjoint(Y)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(LittleAd, ZeroGivesZero) { EXPECT_EQ(little_ad(Tangent9(Tangent9::Zero())).norm(), 0.0); }

TEST(LittleAd, RotationBracket) {
  Tangent9 x = Tangent9::Zero(), y = Tangent9::Zero(), expected = Tangent9::Zero();
  x(0) = 1;
  y(1) = 1;
  expected(2) = 1;
  EXPECT_LT((little_ad(x) * y - expected).norm(), 1e-15);
}

TEST(LittleAd, MatchesCommutator) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 100; ++i) {
    const Tangent9 x = normal9(rng);
    const Tangent9 y = normal9(rng);
    const auto lhs = hat(Tangent9(little_ad(x) * y));
    const auto rhs = hat(x) * hat(y) - hat(y) * hat(x);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Dexp, InverseAtZeroIsIdentity) { EXPECT_TRUE(dexp_inv(Tangent9(Tangent9::Zero())).isIdentity(0.0)); }

TEST(Dexp, InverseFirstOrder) {
  std::mt19937_64 rng(11);
  const Tangent9 xi = normal9(rng);
  EXPECT_LT((dexp_inv(xi, 1) - (Mat9::Identity() - 0.5 * little_ad(xi))).norm(), 1e-15);
}

TEST(Dexp, SecondOrderCoefficientIsOneTwelfth) {
  std::mt19937_64 rng(12);
  const Tangent9 xi = normal9(rng);
  const Mat9 ad = little_ad(xi);
  const Mat9 expected = Mat9::Identity() - 0.5 * ad + ad * ad / 12.0;
  EXPECT_LT((dexp_inv(xi, 2) - expected).norm(), 1e-14);
}

TEST(Dexp, InverseMatchesFiniteDifferenceJacobian) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Tangent9 xi = normal9(rng).normalized() * 0.2;
    // exp(xi + d) ~ exp(J d) exp(xi): J is the left Jacobian.
    const double h = 1e-5;
    Mat9 J;
    const ExtendedPose Xinv = se23_exp(xi).inverse();
    for (int k = 0; k < 9; ++k) {
      Tangent9 e = Tangent9::Zero();
      e(k) = h;
      J.col(k) = (se23_log(se23_exp(xi + e) * Xinv) - se23_log(se23_exp(xi - e) * Xinv)) / (2 * h);
    }
    EXPECT_LT((dexp_inv(xi, 4) - J.inverse()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((dexp(xi) - J).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Dexp, ExactInverseInvertsSeries) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 50; ++i) {
    const Tangent9 xi = random_tangent_bounded(rng, 2.5);
    EXPECT_LT((dexp(xi) * dexp_inv_exact(xi) - Mat9::Identity()).norm(), 1e-10);
  }
}

TEST(Dexp, BernoulliNumbers) {
  EXPECT_DOUBLE_EQ(bernoulli_number(0), 1.0);
  EXPECT_DOUBLE_EQ(bernoulli_number(1), -0.5);
  EXPECT_DOUBLE_EQ(bernoulli_number(2), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(bernoulli_number(3), 0.0);
  EXPECT_DOUBLE_EQ(bernoulli_number(4), -1.0 / 30.0);
  EXPECT_NEAR(bernoulli_number(12), -691.0 / 2730.0, 1e-14);
}

TEST(Bch, ZeroLeftGivesRight) {
  std::mt19937_64 rng(15);
  const Tangent9 y = normal9(rng);
  EXPECT_LT((bch_compose_left_small(Tangent9::Zero(), y) - y).norm(), 1e-15);
}

TEST(Bch, ZeroRightGivesLeft) {
  std::mt19937_64 rng(16);
  const Tangent9 x = normal9(rng);
  EXPECT_LT((bch_compose_left_small(x, Tangent9::Zero()) - x).norm(), 1e-15);
}

TEST(Bch, ErrorIsSecondOrder) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Tangent9 y = normal9(rng, 0.5);
    const Tangent9 dir = normal9(rng).normalized();
    auto err = [&](double eps) {
      const Tangent9 x = eps * dir;
      return (se23_log(se23_exp(x) * se23_exp(y)) - bch_compose_left_small(x, y)).norm();
    };
    const double e1 = err(1e-2);
    const double e2 = err(5e-3);
    EXPECT_GE(e1 / e2, 3.5);
  }
}
