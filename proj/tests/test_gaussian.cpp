#include "test_helpers.hpp"

#include "eikf/gaussian.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace eikf;
using namespace eikf::test;

namespace {

const Vec3 kGravity(0, 0, -9.81);

Mat3 random_mat3(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Mat3 A;
  for (int i = 0; i < 9; ++i) A(i) = n(rng);
  return A;
}

// Monte-Carlo mean and standard error of (I - ad/2 + c ad^2) n' n'^T (.)^T with
// the fourth-order term c^2 ad^2 n' n'^T ad^2T removed, xi ~ N(0, P).
struct McMoment {
  Mat9 mean = Mat9::Zero();
  Mat9 se = Mat9::Zero();
};

McMoment sample_sigma_fourth(const Mat9& Sigma, const Mat9& P, double c, int samples,
                             std::mt19937_64& rng) {
  const Mat9 Lp = P.llt().matrixL();
  const Mat9 Ls = Sigma.llt().matrixL();
  McMoment m;
  Mat9 sq = Mat9::Zero();
  for (int s = 0; s < samples; ++s) {
    const Tangent9 xi = Lp * normal9(rng);
    const Tangent9 n = Ls * normal9(rng);
    const Mat9 ad = little_ad(xi);
    const Tangent9 y = n - 0.5 * ad * n + c * ad * ad * n;
    const Tangent9 q = c * ad * ad * n;
    const Mat9 val = y * y.transpose() - q * q.transpose();
    m.mean += val;
    sq += val.cwiseProduct(val);
  }
  m.mean /= samples;
  sq /= samples;
  m.se = ((sq - m.mean.cwiseProduct(m.mean)) / samples).cwiseSqrt();
  return m;
}

}  // namespace

TEST(Bracket1, Examples) {
  EXPECT_EQ(bracket1(Mat3::Identity()), -2.0 * Mat3::Identity());
  EXPECT_EQ(bracket1(Mat3::Zero()), Mat3::Zero());
  const Mat3 D = Vec3(1, 2, 3).asDiagonal();
  EXPECT_EQ(bracket1(D), Mat3(Vec3(-5, -4, -3).asDiagonal()));
}

TEST(Bracket2, Examples) {
  EXPECT_EQ(bracket2(Mat3::Zero(), Mat3::Zero()), Mat3::Zero());
  EXPECT_LT((bracket2(Mat3::Identity(), Mat3::Identity()) - 2.0 * Mat3::Identity()).norm(), 1e-15);
}

TEST(Bracket2, MatchesFormula) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Mat3 A = random_mat3(rng);
    const Mat3 B = random_mat3(rng);
    const Mat3 I = Mat3::Identity();
    const Mat3 bA = A - A.trace() * I;
    const Mat3 bB = B - B.trace() * I;
    const Mat3 BA = B * A;
    const Mat3 expected = bA * bB + BA - BA.trace() * I;
    EXPECT_LT((bracket2(A, B) - expected).norm(), 1e-12);
  }
}

TEST(Bracket2, HatSandwichExpectation) {
  // E[a^ M b^T] for (a, b) jointly Gaussian with E[a b^T] = C.
  std::mt19937_64 rng(2);
  const Mat3 L = random_mat3(rng);
  const Mat3 M = random_mat3(rng);
  // b = L a with a ~ N(0, I), so C = L^T.
  Mat3 acc = Mat3::Zero();
  const int N = 200000;
  for (int s = 0; s < N; ++s) {
    const Vec3 a = normal3(rng);
    acc += skew(a) * M * skew(L * a).transpose();
  }
  acc /= N;
  const Mat3 C = L.transpose();
  EXPECT_LT((bracket2(C.transpose(), M.transpose()) - acc).norm(), 0.05 * (M.norm() * L.norm()));
}

TEST(SigmaFourth, Limits) {
  std::mt19937_64 rng(3);
  const Mat9 S = random_spd9(rng, 1.0);
  const Mat9 P = random_spd9(rng, 0.01);
  EXPECT_LT((sigma_fourth(S, Mat9::Zero()) - S).norm(), 1e-15);
  EXPECT_EQ(sigma_fourth(Mat9::Zero(), P).norm(), 0.0);
}

TEST(SigmaFourth, DimensionMismatch) {
  try {
    sigma_fourth(MatX(MatX::Identity(9, 9)), MatX(MatX::Identity(6, 6)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(SigmaFourth, Symmetric) {
  std::mt19937_64 rng(4);
  const Mat9 out = sigma_fourth(random_spd9(rng, 1.0), random_spd9(rng, 0.05));
  EXPECT_LT((out - out.transpose()).norm(), 1e-10);
}

TEST(SigmaFourth, DefaultCoefficientIsOneTwelfth) {
  EXPECT_DOUBLE_EQ(dexp_inv_second_order_coefficient(), 1.0 / 12.0);
}

TEST(SigmaFourth, MatchesSamplingOracle) {
  std::mt19937_64 rng(5);
  for (double c : {1.0 / 12.0, 1.0 / 6.0}) {
    const Mat9 S = random_spd9(rng, 1.0);
    const Mat9 P = random_spd9(rng, 0.05);
    const Mat9 est = sigma_fourth(S, P, c);
    const McMoment mc = sample_sigma_fourth(S, P, c, 200000, rng);
    for (int i = 0; i < 81; ++i) {
      EXPECT_LE(std::abs(est(i) - mc.mean(i)), 4.5 * mc.se(i) + 1e-12) << "c=" << c << " i=" << i;
    }
  }
}

TEST(SigmaFourth, CorrectionGrowsWithPrior) {
  std::mt19937_64 rng(6);
  const Mat9 S = random_spd9(rng, 1.0);
  const Mat9 P = random_spd9(rng, 0.01);
  double last = 0.0;
  for (double c : {1.0, 2.0, 4.0}) {
    const Mat9 diff = sigma_fourth(S, c * P) - S;
    EXPECT_LT((diff - diff.transpose()).norm(), 1e-12);
    EXPECT_GT(diff.norm(), last);
    last = diff.norm();
  }
}

TEST(NoiseSigma, IdentityMean) {
  BeliefState b;
  b.cov.setZero();
  NoiseParams np;
  np.sigma_g = 0.02;
  np.sigma_a = 0.03;
  Mat9 expected = Mat9::Zero();
  expected.block<3, 3>(0, 0) = 4e-4 * Mat3::Identity();
  expected.block<3, 3>(6, 6) = 9e-4 * Mat3::Identity();
  EXPECT_LT((noise_sigma_nprime(b, np) - expected).norm(), 1e-18);
}

TEST(NoiseSigma, TableOneValues) {
  BeliefState b;
  b.cov.setZero();
  const Mat9 N = noise_sigma_nprime(b, NoiseParams{});
  Mat9 expected = Mat9::Zero();
  expected.block<3, 3>(0, 0) = 1e-4 * Mat3::Identity();
  expected.block<3, 3>(6, 6) = 1e-4 * Mat3::Identity();
  EXPECT_LT((N - expected).norm(), 1e-18);
}

TEST(NoiseSigma, IncludesBiasCovariance) {
  BeliefState b;
  b.cov.setZero();
  b.cov.block<3, 3>(9, 9) = 1e-3 * Mat3::Identity();
  const Mat9 N = noise_sigma_nprime(b, NoiseParams{});
  EXPECT_NEAR(N(0, 0), 1e-4 + 1e-3, 1e-18);
}

TEST(NoiseSigma, RotationPreservesSpectrum) {
  std::mt19937_64 rng(7);
  BeliefState b;
  b.cov = random_spd15(rng, 0.01);
  const Mat9 N0 = noise_sigma_nprime(b, NoiseParams{});
  b.mean.R = so3_exp(normal3(rng));
  const Mat9 N1 = noise_sigma_nprime(b, NoiseParams{});
  const Vec9 e0 = Eigen::SelfAdjointEigenSolver<Mat9>(N0).eigenvalues();
  const Vec9 e1 = Eigen::SelfAdjointEigenSolver<Mat9>(N1).eigenvalues();
  EXPECT_LT((e0 - e1).norm(), 1e-14);
}

TEST(StateTransition, ZeroStep) { EXPECT_TRUE(state_transition(0.0, kGravity).isIdentity(0.0)); }

TEST(StateTransition, Blocks) {
  const Mat9 Phi = state_transition(0.01, kGravity);
  EXPECT_LT((Phi.block<3, 3>(3, 6) - 0.01 * Mat3::Identity()).norm(), 1e-15);
  EXPECT_LT((Phi.block<3, 3>(6, 0) - 0.01 * skew(kGravity)).norm(), 1e-15);
}

TEST(StateTransition, DriftIsNilpotent) {
  const Mat9 A = error_drift_matrix(kGravity);
  EXPECT_EQ((A * A * A).norm(), 0.0);
}

TEST(StateTransition, MatchesMatrixExponential) {
  const Mat9 A = error_drift_matrix(kGravity);
  EXPECT_LT((state_transition(0.7, kGravity) - expm(0.7 * A)).norm(), 1e-12);
}

TEST(StateTransition, Semigroup) {
  const Mat9 lhs = state_transition(0.3, kGravity) * state_transition(0.45, kGravity);
  EXPECT_LT((lhs - state_transition(0.75, kGravity)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProcessNoise, ZeroInput) {
  EXPECT_EQ(discrete_process_noise(0.01, Mat9::Zero(), kGravity).norm(), 0.0);
}

TEST(ProcessNoise, NoGravityRotationBlock) {
  const Mat9 Q = discrete_process_noise(0.01, Mat9::Identity(), Vec3::Zero());
  EXPECT_LT((Q.block<3, 3>(0, 0) - 0.01 * Mat3::Identity()).norm(), 1e-15);
}

TEST(ProcessNoise, MatchesSimpsonQuadrature) {
  std::mt19937_64 rng(8);
  for (double dt : {0.01, 0.1}) {
    const Mat9 S = random_spd9(rng, 1.0);
    const int N = 1000;
    const double h = dt / N;
    Mat9 quad = Mat9::Zero();
    for (int k = 0; k <= N; ++k) {
      const Mat9 Phi = state_transition(k * h, kGravity);
      const double w = (k == 0 || k == N) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      quad += w * h / 3.0 * Phi * S * Phi.transpose();
    }
    const Mat9 Q = discrete_process_noise(dt, S, kGravity);
    EXPECT_LT((Q - quad).norm(), 1e-9 * Q.norm()) << "dt=" << dt;
  }
}

TEST(Propagate, ZeroStepUnchanged) {
  std::mt19937_64 rng(9);
  BeliefState b;
  b.cov = random_spd15(rng, 0.1);
  EXPECT_EQ(propagate_covariance(b, 0.0, NoiseParams{}, kGravity), b.cov);
}

TEST(Propagate, BiasBlocksGrowByRandomWalk) {
  std::mt19937_64 rng(10);
  BeliefState b;
  b.cov = random_spd15(rng, 0.1);
  NoiseParams np;
  np.sigma_bg = 1e-3;
  np.sigma_ba = 2e-3;
  const Mat15 P = propagate_covariance(b, 0.01, np, kGravity);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(P(9 + i, 9 + i) - b.cov(9 + i, 9 + i), 1e-6 * 0.01, 1e-16);
    EXPECT_NEAR(P(12 + i, 12 + i) - b.cov(12 + i, 12 + i), 4e-6 * 0.01, 1e-16);
  }
}

TEST(Propagate, PreservesSymmetryAndPsd) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(1e-4, 1.0);
  double worst_asym = 0.0, worst_eig = 0.0;
  for (int i = 0; i < 10000; ++i) {
    BeliefState b;
    b.mean = random_pose(rng);
    b.cov = random_spd15(rng, scale(rng));
    const Mat15 P = propagate_covariance(b, 0.01, NoiseParams{}, kGravity);
    worst_asym = std::max(worst_asym, (P - P.transpose()).cwiseAbs().maxCoeff());
    if (i % 10 == 0) {
      const double e = Eigen::SelfAdjointEigenSolver<Mat15>(P).eigenvalues().minCoeff();
      worst_eig = std::min(worst_eig, e);
    }
  }
  EXPECT_LT(worst_asym, 1e-10);
  EXPECT_GT(worst_eig, -1e-9);
}
