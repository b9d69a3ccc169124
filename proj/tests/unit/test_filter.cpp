#include <gtest/gtest.h>

#include <cmath>

#include "l96da/filter.hpp"
#include "l96da/theory.hpp"
#include "test_support.hpp"

namespace l96da {
namespace {

using testing::oracle_po_update;
using testing::random_psd;
using testing::relative_difference;

FilterConfig make_cfg(InflationMode mode, double alpha, int m = 10) { return {mode, alpha, m, 0}; }

Eigen::MatrixXd six_projection() {
  Eigen::VectorXd d(6);
  d << 1, 1, 0, 1, 1, 0;
  return d.asDiagonal();
}

TEST(InflationMode, RoundTrip) {
  for (auto mode : {InflationMode::kNone, InflationMode::kAdditive, InflationMode::kProjectedAdditive})
    EXPECT_EQ(parse_inflation_mode(to_string(mode)), mode);
  EXPECT_EQ(parse_inflation_mode("projected"), InflationMode::kProjectedAdditive);
  EXPECT_THROW(parse_inflation_mode("multiplicative"), std::invalid_argument);
}

TEST(FilterConfig, Validation) {
  EXPECT_THROW(make_cfg(InflationMode::kAdditive, -1.0).validate(), std::invalid_argument);
  EXPECT_THROW(make_cfg(InflationMode::kAdditive, 1.0, 1).validate(), std::invalid_argument);
  EXPECT_NO_THROW(make_cfg(InflationMode::kAdditive, 0.0, 2).validate());
}

TEST(Inflate, ZeroCovarianceExamples) {
  const ObservationOperator op(6, 1.0);
  const Covariance zero = Covariance::zero(6);
  EXPECT_EQ(inflate(zero, make_cfg(InflationMode::kAdditive, 2.0), op).matrix(), 4.0 * Eigen::MatrixXd::Identity(6, 6));
  EXPECT_EQ(inflate(zero, make_cfg(InflationMode::kProjectedAdditive, 2.0), op).matrix(), 4.0 * six_projection());
  EXPECT_EQ(inflate(zero, make_cfg(InflationMode::kNone, 2.0), op).matrix(), zero.matrix());
}

TEST(Inflate, ZeroAlpha) {
  RngStream rng(1);
  const ObservationOperator op(6, 1.0);
  const Covariance p(random_psd(rng, 6, 4));
  const Eigen::MatrixXd pi = six_projection();
  EXPECT_EQ(inflate(p, make_cfg(InflationMode::kAdditive, 0.0), op).matrix(), p.matrix());
  EXPECT_EQ(inflate(p, make_cfg(InflationMode::kProjectedAdditive, 0.0), op).matrix(), pi * p.matrix() * pi);
}

TEST(Inflate, ProjectedMatchesDenseSandwich) {
  RngStream rng(2);
  const ObservationOperator op(12, 1.0);
  const Eigen::MatrixXd pi = op.dense_projection();
  for (int trial = 0; trial < 20; ++trial) {
    const Covariance p(random_psd(rng, 12, 5, 2.0));
    const double alpha = 0.1 * (trial + 1);
    const Eigen::MatrixXd expected = pi * (p.matrix() + alpha * alpha * Eigen::MatrixXd::Identity(12, 12)) * pi;
    EXPECT_LE((inflate(p, make_cfg(InflationMode::kProjectedAdditive, alpha), op).matrix() - expected)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-14);
  }
}

TEST(KalmanGain, ScaledIdentity) {
  const ObservationOperator op(9, 0.5);
  const double p2 = 3.0;
  const Eigen::MatrixXd k = kalman_gain(Covariance::scaled_identity(9, p2), op);
  const Eigen::MatrixXd expected = (p2 / (p2 + 0.25)) * op.dense_h().transpose();
  EXPECT_LE((k - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(KalmanGain, ZeroCovarianceGivesZeroGain) {
  const ObservationOperator op(9, 1.0);
  EXPECT_EQ(kalman_gain(Covariance::zero(9), op).cwiseAbs().maxCoeff(), 0.0);
}

TEST(KalmanGain, SolvesNormalEquations) {
  RngStream rng(3);
  const ObservationOperator op(12, 0.8);
  const Eigen::MatrixXd h = op.dense_h();
  const Eigen::MatrixXd r = op.dense_noise_covariance();
  for (int trial = 0; trial < 50; ++trial) {
    const Covariance p(random_psd(rng, 12, 1 + trial % 12, 3.0));
    const Eigen::MatrixXd k = kalman_gain(p, op);
    const Eigen::MatrixXd residual = k * (h * p.matrix() * h.transpose() + r) - p.matrix() * h.transpose();
    EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(PerturbObservations, MemberMajorDraws) {
  const ObservationOperator op(6, 2.0);
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  RngStream a(4);
  RngStream b(4);
  const Eigen::MatrixXd out = perturb_observations(y, 3, op, a);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 4; ++i) EXPECT_EQ(out(i, k), y[i] + 2.0 * b.normal());
}

TEST(Analysis, ZeroCovarianceIsIdentity) {
  RngStream rng(5);
  const ObservationOperator op(12, 1.0);
  const Ensemble forecast(rng.normal_matrix(12, 4, 3.0));
  const Eigen::MatrixXd ypert = rng.normal_matrix(8, 4);
  EXPECT_EQ(analysis_gain_form(forecast, ypert, Covariance::zero(12), op).matrix(), forecast.matrix());
  EXPECT_LE((analysis_implicit(forecast, ypert, Covariance::zero(12), op).matrix() - forecast.matrix())
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
}

TEST(Analysis, HugeNoiseBarelyMoves) {
  RngStream rng(6);
  const ObservationOperator op(12, 1e6);
  const Ensemble forecast(rng.normal_matrix(12, 5, 2.0));
  const Eigen::MatrixXd ypert = rng.normal_matrix(8, 5, 5.0);
  const Covariance p(random_psd(rng, 12, 6));
  const Ensemble analysis = analysis_gain_form(forecast, ypert, p, op);
  for (int k = 0; k < 5; ++k) {
    const double innovation = (ypert.col(k) - op.apply(forecast.member(k))).norm();
    EXPECT_LE((analysis.member(k) - forecast.member(k)).norm(), 1e-4 * innovation);
  }
}

TEST(Analysis, PerturbedObservationsDistinguishMembers) {
  // Two identical forecasts still split apart because each gets its own y + xi_k.
  const ObservationOperator op(6, 1.0);
  const Ensemble forecast = Ensemble::replicate(Eigen::VectorXd::Constant(6, 8.0), 2);
  RngStream rng(7);
  const Ensemble analysis = analysis_po(forecast, Eigen::VectorXd::Constant(4, 8.0),
                                        Covariance::scaled_identity(6, 1.0), op, rng);
  EXPECT_GT((analysis.member(0) - analysis.member(1)).norm(), 1e-6);
}

TEST(Analysis, GainFormMatchesDenseOracle) {
  RngStream rng(8);
  const ObservationOperator op(12, 0.7);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = trial % 2 == 0 ? 3 : 10;
    const Ensemble forecast(rng.normal_matrix(12, m, 4.0));
    const Eigen::MatrixXd ypert = rng.normal_matrix(8, m, 4.0);
    const Covariance p(random_psd(rng, 12, m, 2.0));
    const Eigen::MatrixXd expected = oracle_po_update(forecast.matrix(), ypert, p.matrix(), op.dense_h(), 0.7);
    EXPECT_LE(relative_difference(analysis_gain_form(forecast, ypert, p, op).matrix(), expected), 1e-10);
  }
}

TEST(Analysis, ImplicitMatchesGainForm) {
  RngStream rng(9);
  const ObservationOperator op(12, 1.0);
  for (int m : {3, 10}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Ensemble forecast(rng.normal_matrix(12, m, 5.0));
      const Eigen::MatrixXd ypert = rng.normal_matrix(8, m, 5.0);
      const Covariance p = inflate(covariance(forecast), make_cfg(InflationMode::kAdditive, 0.3 * (trial % 4)), op);
      const Eigen::MatrixXd gain = analysis_gain_form(forecast, ypert, p, op).matrix();
      const Eigen::MatrixXd implicit = analysis_implicit(forecast, ypert, p, op).matrix();
      EXPECT_LE(relative_difference(implicit, gain), 1e-8) << "m=" << m << " trial=" << trial;
    }
  }
}

TEST(Analysis, ScalarHandCase) {
  // One observed block of J=6 gives scalar updates on each observed component:
  // v = (r^2 vhat + p y) / (p + r^2) with p the diagonal variance.
  const ObservationOperator op(6, 2.0);
  const Ensemble forecast(Eigen::MatrixXd::Constant(6, 1, 1.0));
  Eigen::MatrixXd ypert(4, 1);
  ypert << 3, -1, 5, 0;
  const Covariance p = Covariance::scaled_identity(6, 4.0);
  const Ensemble out = analysis_gain_form(forecast, ypert, p, op);
  Eigen::VectorXd expected(6);
  expected << 2.0, 0.0, 1.0, 3.0, 0.5, 1.0;
  EXPECT_LE((out.member(0) - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((analysis_implicit(forecast, ypert, p, op).member(0) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Predict, MemberwiseFlow) {
  RngStream rng(10);
  const ModelParams params{12, 8.0, 0.01};
  const Ensemble e(Eigen::MatrixXd::Constant(12, 3, 8.0) + rng.normal_matrix(12, 3));
  const Ensemble out = predict(e, 0.05, params);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(out.member(k), flow(e.member(k), 0.05, params));
}

TEST(PoCycle, CollapsedEnsembleWithoutInflationOnlyPredicts) {
  const ModelParams params{12, 8.0, 0.01};
  const ObservationOperator op(12, 1.0);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(12, 8.0);
  u[3] += 0.5;
  const FilterState state{Ensemble::replicate(u, 4)};
  RngStream rng(11);
  const FilterState next =
      po_cycle(state, Eigen::VectorXd::Zero(8), 0.01, params, make_cfg(InflationMode::kNone, 0.0, 4), op, rng);
  EXPECT_EQ(next.step, 1);
  EXPECT_EQ(next.last_gain_norm, 0.0);
  const Eigen::VectorXd predicted = step_rk4(u, params);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(next.ensemble.member(k), predicted);
}

TEST(PoCycle, Deterministic) {
  const ModelParams params{12, 8.0, 0.01};
  const ObservationOperator op(12, 1.0);
  RngStream init(12);
  const FilterState state{Ensemble(Eigen::MatrixXd::Constant(12, 5, 8.0) + init.normal_matrix(12, 5))};
  const Eigen::VectorXd y = init.normal_vector(8, 3.0);
  RngStream a(13);
  RngStream b(13);
  const FilterConfig cfg = make_cfg(InflationMode::kAdditive, 0.5, 5);
  EXPECT_EQ(po_cycle(state, y, 0.01, params, cfg, op, a).ensemble.matrix(),
            po_cycle(state, y, 0.01, params, cfg, op, b).ensemble.matrix());
}

TEST(PoCycle, ProjectedInflationNeverTouchesUnobservedComponents) {
  const ModelParams params{12, 8.0, 0.01};
  const ObservationOperator op(12, 1.0);
  RngStream init(14);
  FilterState state{Ensemble(Eigen::MatrixXd::Constant(12, 6, 8.0) + init.normal_matrix(12, 6, 2.0))};
  RngStream rng(15);
  for (int n = 0; n < 50; ++n) {
    const Eigen::VectorXd y = init.normal_vector(8, 4.0);
    const Ensemble forecast = predict(state.ensemble, 0.01, params);
    state = po_cycle(state, y, 0.01, params, make_cfg(InflationMode::kProjectedAdditive, 2.0, 6), op, rng);
    EXPECT_EQ(state.last_unobserved_increment, 0.0);
    for (int k = 0; k < 6; ++k) EXPECT_EQ(op.complement(state.ensemble.member(k)), op.complement(forecast.member(k)));
  }
}

TEST(PoCycle, AdditiveInflationMovesUnobservedComponents) {
  const ModelParams params{12, 8.0, 0.01};
  const ObservationOperator op(12, 1.0);
  RngStream init(16);
  const FilterState state{Ensemble(Eigen::MatrixXd::Constant(12, 6, 8.0) + init.normal_matrix(12, 6, 2.0))};
  RngStream rng(17);
  const FilterState next = po_cycle(state, init.normal_vector(8, 4.0), 0.01, params,
                                    make_cfg(InflationMode::kAdditive, 2.0, 6), op, rng);
  EXPECT_GT(next.last_unobserved_increment, 1e-6);
}

TEST(GainContraction, InflatedShrinkNormAtMostOne) {
  RngStream rng(18);
  const ObservationOperator op(12, 1.3);
  for (int trial = 0; trial < 50; ++trial) {
    const Covariance p(random_psd(rng, 12, 4, 2.0));
    for (auto mode : {InflationMode::kAdditive, InflationMode::kProjectedAdditive}) {
      const double alpha = 0.5 * (trial % 5);
      const Covariance pa = inflate(p, make_cfg(mode, alpha), op);
      const Eigen::MatrixXd s = pa.matrix() / op.noise_variance();
      // ||(I + r^-2 P^a)^-1|| = 1 - ||(I + S)^-1 S|| for symmetric PSD S.
      const Eigen::MatrixXd resolvent = (Eigen::MatrixXd::Identity(12, 12) + s).inverse();
      EXPECT_LE(resolvent.operatorNorm(), 1.0 + 1e-12);
      EXPECT_LE(shrink_norm(s, true), 1.0 + 1e-12);

      const Eigen::MatrixXd hph = op.dense_h() * pa.matrix() * op.dense_h().transpose();
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hph);
      EXPECT_GE(eig.eigenvalues().minCoeff(), alpha * alpha - 1e-10);
    }
  }
}

}  // namespace
}  // namespace l96da
