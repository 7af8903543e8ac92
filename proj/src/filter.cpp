#include "eikf/filter.hpp"

#include "eikf/baseline.hpp"
#include "eikf/consistent.hpp"

#include <cmath>

namespace eikf {

std::string to_string(FilterVariant v) {
  switch (v) {
    case FilterVariant::EKF: return "EKF";
    case FilterVariant::IEKF: return "IEKF";
    case FilterVariant::InEKF: return "InEKF";
    case FilterVariant::EIKF_I: return "EIKF-I";
    case FilterVariant::EIKF_C: return "EIKF-C";
  }
  return "unknown";
}

FilterVariant filter_variant_from_string(const std::string& name) {
  for (auto v : {FilterVariant::EKF, FilterVariant::IEKF, FilterVariant::InEKF,
                 FilterVariant::EIKF_I, FilterVariant::EIKF_C}) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::ConfigError, "unknown filter variant '" + name + "'");
}

MatX kalman_gain_covariance_form(const MatX& P, const MatX& Jinv, const MatX& H,
                                 const MatX& Sigma) {
  const MatX HJ = H * Jinv;
  const MatX S = HJ * P * HJ.transpose() + Sigma;
  Eigen::LDLT<MatX> ldlt(S);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "S not factorable");
  return ldlt.solve(HJ * P).transpose();
}

MatX kalman_gain_information_form(const MatX& P, const MatX& J, const MatX& H, const MatX& Sigma) {
  Eigen::LDLT<MatX> Pf(P);
  Eigen::LDLT<MatX> Sf(Sigma);
  const MatX SiH = Sf.solve(H);
  const MatX info = J.transpose() * Pf.solve(J) + H.transpose() * SiH;
  Eigen::LDLT<MatX> If(info);
  if (If.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "information matrix not factorable");
  }
  const MatX F = If.solve(MatX::Identity(info.rows(), info.cols()));
  return J * F * SiH.transpose();
}

namespace {

Mat15 augmented(const Mat9& J) {
  Mat15 out = Mat15::Identity();
  out.topLeftCorner<9, 9>() = J;
  return out;
}

MatX augmented_rows(const MatX& H9) {
  MatX H = MatX::Zero(H9.rows(), 15);
  H.leftCols(9) = H9;
  return H;
}

Vec15 stacked(const Tangent9& xi, const Vec3& dbg, const Vec3& dba) {
  Vec15 d;
  d << xi, dbg, dba;
  return d;
}

Tangent9 checked_log(const ExtendedPose& X) {
  if (rotation_angle(X.R) > M_PI - 1e-6) {
    throw Error(ErrorCode::LogDomain, "rotation offset outside the log domain");
  }
  return se23_log(X);
}

double effective_sigma(double sigma, const UpdateConfig& cfg) {
  return std::max(sigma, cfg.sigma_floor);
}

double prior_term(const Vec15& delta, const Mat15& Jinv, const Mat15& P, CostForm form) {
  if (form == CostForm::Printed) {
    const Vec15 w = Jinv.transpose() * delta;
    return w.dot(P * w);
  }
  return delta.dot(P.ldlt().solve(delta));
}

double cost_from(const Vec15& delta, const Mat15& Jinv, const Mat15& P, const VecX& r,
                 double sigma, CostForm form) {
  return prior_term(delta, Jinv, P, form) + r.squaredNorm() / (sigma * sigma);
}

}  // namespace

GainStep gain_step(const Mat15& P, const Mat15& Jinv, const MatX& H15, const VecX& r,
                   double sigma2, const Vec15& delta) {
  if (H15.cols() != 15 || H15.rows() != r.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "H and r disagree");
  }
  if (H15.isZero(0.0)) {
    GainStep out;
    out.posterior = symmetrized(Mat15(Jinv * P * Jinv.transpose()));
    return out;
  }
  // Square-root evaluation of K = P Jinv^T H^T S^-1 with P = L L^T and
  // M = H Jinv L: K innov = L z where z solves the stacked least-squares
  // problem [M; sigma I] z = [innov; 0], and the posterior is
  // sigma^2 (Jinv L R^-1)(Jinv L R^-1)^T with R^T R = M^T M + sigma^2 I.
  Eigen::SelfAdjointEigenSolver<Mat15> pe(P);
  const double pmax = pe.eigenvalues().cwiseAbs().maxCoeff();
  if (!std::isfinite(pmax) || pe.eigenvalues().minCoeff() < -1e-12 * pmax) {
    throw Error(ErrorCode::NumericalFailure, "prior covariance is not positive semidefinite");
  }
  const Mat15 L =
      pe.eigenvectors() * pe.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const int m = static_cast<int>(H15.rows());
  const double sigma = std::sqrt(sigma2);
  MatX stacked(m + 15, 15);
  stacked.topRows(m) = H15 * (Jinv * L);
  stacked.bottomRows(15) = sigma * Mat15::Identity();
  VecX rhs = VecX::Zero(m + 15);
  rhs.head(m) = r + H15 * delta;

  Eigen::HouseholderQR<MatX> qr(stacked);
  const Mat15 R = qr.matrixQR().topRows(15).triangularView<Eigen::Upper>();
  const Vec15 rdiag = R.diagonal().cwiseAbs();
  if (!std::isfinite(rdiag.maxCoeff()) || !(rdiag.minCoeff() > 1e-15 * rdiag.maxCoeff())) {
    throw Error(ErrorCode::NumericalFailure, "gain system is numerically singular");
  }
  const auto Ru = R.triangularView<Eigen::Upper>();
  const VecX qtr = qr.householderQ().adjoint() * rhs;
  const Vec15 z = Ru.solve(Vec15(qtr.head(15)));

  GainStep out;
  out.increment = L * z;
  // W^T = R^-T (Jinv L)^T.
  const Mat15 Wt = Ru.transpose().solve(Mat15((Jinv * L).transpose()));
  out.posterior = symmetrized(Mat15(sigma2 * Wt.transpose() * Wt));
  // K K^T = B (I - sigma^2 R^-T R^-1) B^T with B = L R^-1.
  const Mat15 Rinv = Ru.solve(Mat15::Identity());
  const Mat15 B = L * Rinv;
  const Mat15 KKt = B * (Mat15::Identity() - sigma2 * Rinv.transpose() * Rinv) * B.transpose();
  out.gain_norm = std::sqrt(std::max(KKt.trace(), 0.0));
  return out;
}

BeliefState predict(const BeliefState& belief, std::span<const ImuSample> window, double t_end,
                    const NoiseParams& params, const Vec3& gravity) {
  if (window.empty()) throw Error(ErrorCode::EmptyWindow, "empty IMU window");
  BeliefState b = belief;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double t_next = i + 1 < window.size() ? window[i + 1].t : t_end;
    const double dt = t_next - window[i].t;
    if (!(dt > 0.0)) throw Error(ErrorCode::NonMonotonicTime, "IMU timestamps must increase");
    b.cov = propagate_covariance(b, dt, params, gravity);
    b.mean = imu_mean_propagate(b.mean, b.bias_g, b.bias_a, window[i], dt, gravity);
  }
  return b;
}

double update_cost(const ExtendedPose& mu, const Vec3& bias_g, const Vec3& bias_a,
                   const BeliefState& prior, const MeasurementBatch& batch,
                   const SensorSetup& setup, CostForm form) {
  const Tangent9 d9 = checked_log(mu * prior.mean.inverse());
  const Vec15 delta = stacked(d9, bias_g - prior.bias_g, bias_a - prior.bias_a);
  const Linearization lin = linearize(batch, setup, mu);
  return cost_from(delta, augmented(dexp(d9)), prior.cov, lin.r, lin.sigma, form);
}

double update_cost(const ExtendedPose& mu, const BeliefState& prior,
                   const MeasurementBatch& batch, const SensorSetup& setup, CostForm form) {
  return update_cost(mu, prior.bias_g, prior.bias_a, prior, batch, setup, form);
}

UpdateResult iterated_update(const BeliefState& prior, const MeasurementBatch& batch,
                             const SensorSetup& setup, const UpdateConfig& cfg,
                             const ExtendedPose& mu0) {
  if (cfg.l_max < 1) throw Error(ErrorCode::ConfigError, "l_max must be at least 1");
  if (batch_size(batch) == 0) throw Error(ErrorCode::EmptyBatch, "empty measurement batch");
  const ExtendedPose Xbar_inv = prior.mean.inverse();

  UpdateResult res;
  res.report.path = UpdatePath::Iterated;
  ExtendedPose mu = mu0;
  Vec3 bg = prior.bias_g;
  Vec3 ba = prior.bias_a;
  GainStep step;
  for (int l = 0;; ++l) {
    const Tangent9 d9 = checked_log(mu * Xbar_inv);
    const Vec15 delta = stacked(d9, bg - prior.bias_g, ba - prior.bias_a);
    const Linearization lin = linearize(batch, setup, mu);
    if (lin.used == 0) throw Error(ErrorCode::EmptyBatch, "no visible features");
    const double sigma = effective_sigma(lin.sigma, cfg);
    const Mat15 Jinv = augmented(dexp(d9));
    const double c = cost_from(delta, Jinv, prior.cov, lin.r, sigma, cfg.cost);
    if (!std::isfinite(c)) throw Error(ErrorCode::NumericalFailure, "non-finite cost");
    res.report.costs.push_back(c);
    res.report.final_cost = c;
    if (l > 0 && std::abs(c - res.report.costs[l - 1]) <= cfg.tau) break;

    step = gain_step(prior.cov, Jinv, augmented_rows(lin.H), lin.r, sigma * sigma, delta);
    mu = se23_exp(step.increment.head<9>()) * prior.mean;
    bg = prior.bias_g + step.increment.segment<3>(9);
    ba = prior.bias_a + step.increment.tail<3>();
    res.report.iterations_used = l + 1;
    res.report.gain_norm = step.gain_norm;
    res.report.features_used = lin.used;
    res.report.features_dropped = lin.dropped;
    res.report.sigma_used = sigma;
    // Evaluating the cost at the last iterate would cost a linearization nobody uses.
    if (l + 1 == cfg.l_max) break;
  }
  res.belief.mean = mu;
  res.belief.bias_g = bg;
  res.belief.bias_a = ba;
  res.belief.cov = step.posterior;
  return res;
}

UpdateResult eikf_update(const BeliefState& prior, const MeasurementBatch& batch,
                         const SensorSetup& setup, const UpdateConfig& cfg) {
  const ConsistentPoseResult cons = consistent_pose(batch, setup);
  const Pose& T_IS = is_camera(batch) ? setup.extrinsics.T_IC : setup.extrinsics.T_IL;
  const Pose T_hat = cons.pose * T_IS.inverse();
  const ExtendedPose mu{T_hat.R, T_hat.p, prior.mean.v};

  const double sigma_cfg = is_camera(batch) ? setup.sigma_camera : setup.sigma_lidar;
  const double sigma = effective_sigma(cfg.use_configured_sigma ? sigma_cfg : cons.sigma_hat, cfg);

  const Tangent9 d9 = checked_log(mu * prior.mean.inverse());
  const Vec15 delta = stacked(d9, Vec3::Zero(), Vec3::Zero());
  const Linearization lin = linearize(batch, setup, mu);
  if (lin.used == 0) throw Error(ErrorCode::EmptyBatch, "no visible features");
  const Mat15 Jinv = augmented(dexp(d9));
  const GainStep step =
      gain_step(prior.cov, Jinv, augmented_rows(lin.H), lin.r, sigma * sigma, delta);

  UpdateResult res;
  res.belief.mean = se23_exp(step.increment.head<9>()) * prior.mean;
  res.belief.bias_g = prior.bias_g + step.increment.segment<3>(9);
  res.belief.bias_a = prior.bias_a + step.increment.tail<3>();
  res.belief.cov = step.posterior;
  res.report.path = UpdatePath::Eikf;
  res.report.iterations_used = 1;
  res.report.final_cost = cost_from(delta, Jinv, prior.cov, lin.r, sigma, cfg.cost);
  res.report.costs = {res.report.final_cost};
  res.report.gain_norm = step.gain_norm;
  res.report.features_used = lin.used;
  res.report.features_dropped = lin.dropped;
  res.report.sigma_used = sigma;
  return res;
}

UpdateResult practical_eikf_update(const BeliefState& prior, const MeasurementBatch& batch,
                                   const SensorSetup& setup, const UpdateConfig& cfg) {
  const std::size_t n = batch_size(batch);
  if (n == 0) return {prior, UpdateReport{}};
  if (n > static_cast<std::size_t>(cfg.N_threshold)) {
    try {
      return eikf_update(prior, batch, setup, cfg);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::TooFewFeatures:
        case ErrorCode::SingularPencil:
        case ErrorCode::IllConditioned:
        case ErrorCode::DegenerateRotationBlock:
        case ErrorCode::DegenerateGeometry:
        case ErrorCode::LogDomain:
          break;  // fall through to the iterated update
        default:
          throw;
      }
    }
  }
  return iterated_update(prior, batch, setup, cfg, prior.mean);
}

UpdateResult practical_eikf_step(const BeliefState& belief, std::span<const ImuSample> window,
                                 double t_end, const MeasurementBatch& batch,
                                 const SensorSetup& setup, const UpdateConfig& cfg,
                                 const NoiseParams& params, const Vec3& gravity) {
  const BeliefState prior = predict(belief, window, t_end, params, gravity);
  return practical_eikf_update(prior, batch, setup, cfg);
}

BeliefState fused_map_with_virtual_pose(const BeliefState& belief, const Pose& T_virtual,
                                        const Mat6& F) {
  const Pose T_bar = belief.mean.pose();
  const Pose D = T_virtual * T_bar.inverse();
  if (rotation_angle(D.R) > M_PI - 1e-6) {
    throw Error(ErrorCode::LogDomain, "virtual pose outside the log domain");
  }
  const Tangent6 d_tilde = se3_log(D);
  const Mat6 Jt = dexp(d_tilde);
  Eigen::Matrix<double, 6, 15> I_t = Eigen::Matrix<double, 6, 15>::Zero();
  I_t.leftCols<6>() = Mat6::Identity();

  const Eigen::Matrix<double, 6, 15> JI = Jt * I_t;
  Eigen::LDLT<Mat15> Pf(belief.cov);
  const Mat15 hess = Pf.solve(Mat15::Identity()) + JI.transpose() * F * JI;
  const Vec15 d_hat = hess.ldlt().solve(JI.transpose() * F * d_tilde);

  BeliefState out;
  out.mean = se23_exp(d_hat.head<9>()) * belief.mean;
  out.bias_g = belief.bias_g + d_hat.segment<3>(9);
  out.bias_a = belief.bias_a + d_hat.tail<3>();
  const Mat15 J = augmented(dexp_inv_exact(Tangent9(d_hat.head<9>())));
  const Mat15 info = J.transpose() * Pf.solve(J) + I_t.transpose() * F * I_t;
  out.cov = symmetrized(Mat15(info.ldlt().solve(Mat15::Identity())));
  return out;
}

Mat9 invariant_from_local_jacobian(const ExtendedPose& X) {
  Mat9 M = Mat9::Identity();
  M.block<3, 3>(0, 0) = X.R;
  M.block<3, 3>(3, 0) = skew(X.p) * X.R;
  M.block<3, 3>(6, 0) = skew(X.v) * X.R;
  return M;
}

Mat15 invariant_cov_from_local(const Mat15& local, const ExtendedPose& X) {
  const Mat15 M = augmented(invariant_from_local_jacobian(X));
  return symmetrized(Mat15(M * local * M.transpose()));
}

namespace {

class InvariantFilter final : public Filter {
 public:
  InvariantFilter(FilterVariant v, const FilterInit& init, const SensorSetup& setup,
                  const UpdateConfig& cfg, const NoiseParams& params, const Vec3& gravity)
      : variant_(v), setup_(setup), cfg_(cfg), params_(params), gravity_(gravity) {
    belief_.mean = init.mean;
    belief_.bias_g = init.bias_g;
    belief_.bias_a = init.bias_a;
    belief_.cov = invariant_cov_from_local(init.local_cov, init.mean);
    if (v == FilterVariant::InEKF) cfg_.l_max = 1;
  }
  void predict(std::span<const ImuSample> window, double t_end) override {
    belief_ = eikf::predict(belief_, window, t_end, params_, gravity_);
  }
  UpdateReport update(const MeasurementBatch& batch) override {
    if (batch_size(batch) == 0) return {};
    UpdateResult r = variant_ == FilterVariant::EIKF_C
                         ? practical_eikf_update(belief_, batch, setup_, cfg_)
                         : iterated_update(belief_, batch, setup_, cfg_, belief_.mean);
    belief_ = r.belief;
    return r.report;
  }
  ExtendedPose estimate() const override { return belief_.mean; }
  Mat15 covariance() const override { return belief_.cov; }
  FilterVariant variant() const override { return variant_; }

 private:
  FilterVariant variant_;
  SensorSetup setup_;
  UpdateConfig cfg_;
  NoiseParams params_;
  Vec3 gravity_;
  BeliefState belief_;
};

class EskfFilter final : public Filter {
 public:
  EskfFilter(FilterVariant v, const FilterInit& init, const SensorSetup& setup,
             const UpdateConfig& cfg, const NoiseParams& params, const Vec3& gravity)
      : variant_(v), setup_(setup), cfg_(cfg), params_(params), gravity_(gravity) {
    state_.mean = init.mean;
    state_.bias_g = init.bias_g;
    state_.bias_a = init.bias_a;
    state_.cov = init.local_cov;
    if (v == FilterVariant::EKF) cfg_.l_max = 1;
  }
  void predict(std::span<const ImuSample> window, double t_end) override {
    state_ = eskf_predict(state_, window, t_end, params_, gravity_);
  }
  UpdateReport update(const MeasurementBatch& batch) override {
    if (batch_size(batch) == 0) return {};
    EskfUpdateResult r = baseline_update(state_, batch, setup_, cfg_);
    state_ = r.state;
    return r.report;
  }
  ExtendedPose estimate() const override { return state_.mean; }
  Mat15 covariance() const override { return state_.cov; }
  FilterVariant variant() const override { return variant_; }

 private:
  FilterVariant variant_;
  SensorSetup setup_;
  UpdateConfig cfg_;
  NoiseParams params_;
  Vec3 gravity_;
  EskfState state_;
};

}  // namespace

std::unique_ptr<Filter> make_filter(FilterVariant variant, const FilterInit& init,
                                    const SensorSetup& setup, const UpdateConfig& cfg,
                                    const NoiseParams& params, const Vec3& gravity) {
  if (variant == FilterVariant::EKF || variant == FilterVariant::IEKF) {
    return std::make_unique<EskfFilter>(variant, init, setup, cfg, params, gravity);
  }
  return std::make_unique<InvariantFilter>(variant, init, setup, cfg, params, gravity);
}

}  // namespace eikf
