#include "eikf/gaussian.hpp"

namespace eikf {

Mat3 bracket1(const Mat3& A) { return -A.trace() * Mat3::Identity() + A; }

Mat3 bracket2(const Mat3& A, const Mat3& B) { return bracket1(A) * bracket1(B) + bracket1(B * A); }

namespace {

Mat3 blk(const Mat9& M, int i, int j) { return M.block<3, 3>(3 * i, 3 * j); }

// E[a^ M b^T] for zero-mean Gaussian a, b with E[a b^T] = C.
Mat3 hat_sandwich(const Mat3& C, const Mat3& M) {
  return bracket2(C.transpose(), M.transpose());
}

}  // namespace

Mat9 expected_ad_squared(const Mat9& P) {
  const Mat3 Ptt = blk(P, 0, 0);
  const Mat3 Ptp = blk(P, 0, 1);
  const Mat3 Ptv = blk(P, 0, 2);
  Mat9 D = Mat9::Zero();
  const Mat3 diag = bracket1(Ptt);
  D.block<3, 3>(0, 0) = diag;
  D.block<3, 3>(3, 3) = diag;
  D.block<3, 3>(6, 6) = diag;
  D.block<3, 3>(3, 0) = bracket1(Ptp + Ptp.transpose());
  D.block<3, 3>(6, 0) = bracket1(Ptv + Ptv.transpose());
  return D;
}

Mat9 expected_ad_sigma_ad(const Mat9& S, const Mat9& P) {
  // Row block k of ad_xi is [t_k^, 0.., theta^ (at column k), ..] with
  // t_0 = theta for the rotation row. Expand E[row_i S row_j^T] term by term.
  Mat9 B = Mat9::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      // Row i = a_i^ at column 0 plus (i > 0) theta^ at column i.
      Mat3 acc = hat_sandwich(blk(P, i, j), blk(S, 0, 0));
      if (j > 0) acc += hat_sandwich(blk(P, i, 0), blk(S, 0, j));
      if (i > 0) acc += hat_sandwich(blk(P, 0, j), blk(S, i, 0));
      if (i > 0 && j > 0) acc += hat_sandwich(blk(P, 0, 0), blk(S, i, j));
      B.block<3, 3>(3 * i, 3 * j) = acc;
      if (i != j) B.block<3, 3>(3 * j, 3 * i) = acc.transpose();
    }
  }
  return B;
}

double dexp_inv_second_order_coefficient() { return bernoulli_number(2) / 2.0; }

Mat9 sigma_fourth(const Mat9& Sigma, const Mat9& P_bar, double second_order_coeff) {
  const Mat9 D = expected_ad_squared(P_bar);
  const Mat9 B = expected_ad_sigma_ad(Sigma, P_bar);
  const Mat9 out = Sigma + second_order_coeff * (D * Sigma + Sigma * D.transpose()) + 0.25 * B;
  return symmetrized(out);
}

MatX sigma_fourth(const MatX& Sigma_nprime, const MatX& P_bar) {
  if (Sigma_nprime.rows() != 9 || Sigma_nprime.cols() != 9 || P_bar.rows() != 9 ||
      P_bar.cols() != 9) {
    throw Error(ErrorCode::DimensionMismatch, "sigma_fourth expects 9x9 inputs");
  }
  return sigma_fourth(Mat9(Sigma_nprime), Mat9(P_bar));
}

Mat9 noise_sigma_nprime(const BeliefState& belief, const NoiseParams& params) {
  Mat9 N = Mat9::Zero();
  N.block<3, 3>(0, 0) = params.sigma_g * params.sigma_g * Mat3::Identity() +
                        belief.cov.block<3, 3>(9, 9);
  N.block<3, 3>(6, 6) = params.sigma_a * params.sigma_a * Mat3::Identity() +
                        belief.cov.block<3, 3>(12, 12);
  const Mat9 Ad = adjoint(belief.mean);
  return symmetrized(Mat9(Ad * N * Ad.transpose()));
}

Mat9 error_drift_matrix(const Vec3& gravity) {
  Mat9 A = Mat9::Zero();
  A.block<3, 3>(3, 6) = Mat3::Identity();
  A.block<3, 3>(6, 0) = skew(gravity);
  return A;
}

Mat9 state_transition(double dt, const Vec3& gravity) {
  const Mat9 A = error_drift_matrix(gravity);
  return Mat9::Identity() + A * dt + A * A * (0.5 * dt * dt);
}

Mat9 discrete_process_noise(double dt, const Mat9& Sigma_4th, const Vec3& gravity) {
  const Mat9 A = error_drift_matrix(gravity);
  const Mat9 powers[3] = {Mat9::Identity(), A, A * A};
  const double inv_fact[3] = {1.0, 1.0, 0.5};
  Mat9 Q = Mat9::Zero();
  for (int i = 0; i < 3; ++i) {
    const Mat9 left = powers[i] * Sigma_4th;
    for (int j = 0; j < 3; ++j) {
      const int k = i + j + 1;
      const double w = inv_fact[i] * inv_fact[j] * std::pow(dt, k) / k;
      Q += w * left * powers[j].transpose();
    }
  }
  return symmetrized(Q);
}

Mat15 propagate_covariance(const BeliefState& belief, double dt, const NoiseParams& params,
                           const Vec3& gravity) {
  if (dt == 0.0) return belief.cov;
  const Mat9 Phi = state_transition(dt, gravity);
  const Mat9 P_xi = belief.cov.topLeftCorner<9, 9>();
  const Mat9 S4 = sigma_fourth(noise_sigma_nprime(belief, params), P_xi);

  Mat15 P = belief.cov;
  P.topLeftCorner<9, 9>() = Phi * P_xi * Phi.transpose() + discrete_process_noise(dt, S4, gravity);
  P.topRightCorner<9, 6>() = Phi * belief.cov.topRightCorner<9, 6>();
  P.bottomLeftCorner<6, 9>() = P.topRightCorner<9, 6>().transpose();
  P.block<3, 3>(9, 9) += params.sigma_bg * params.sigma_bg * dt * Mat3::Identity();
  P.block<3, 3>(12, 12) += params.sigma_ba * params.sigma_ba * dt * Mat3::Identity();
  return symmetrized(P);
}

}  // namespace eikf
