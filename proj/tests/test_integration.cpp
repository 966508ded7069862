#include <gtest/gtest.h>

#include <cmath>

#include "lsdm/pipeline.hpp"
#include "lsdm/theorems.hpp"

using namespace lsdm;

// One trained circle pipeline shared across the assertions below.
class TrainedCircleModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    harness::ExperimentConfig cfg;  // n = 250, N = 750, m = 1, cLSDM, W1-GP
    artifacts_ = new harness::PipelineArtifacts();
    record_ = new harness::MetricsRecord(
        harness::run_pipeline(cfg, 17, artifacts_));
  }
  static void TearDownTestSuite() {
    delete artifacts_;
    delete record_;
    artifacts_ = nullptr;
    record_ = nullptr;
  }
  static harness::PipelineArtifacts* artifacts_;
  static harness::MetricsRecord* record_;
};

harness::PipelineArtifacts* TrainedCircleModel::artifacts_ = nullptr;
harness::MetricsRecord* TrainedCircleModel::record_ = nullptr;

TEST_F(TrainedCircleModel, StatusOkAndTheoremsHold) {
  EXPECT_EQ(record_->status, "ok");
  EXPECT_TRUE(record_->thm1_holds);
  EXPECT_TRUE(record_->thm2_holds);
}

TEST_F(TrainedCircleModel, BeatsQuantileOracleBaselineWithinFactor) {
  // Achievability benchmark: the quantile-oracle generator is a consistent
  // construction for m = 1, so the trained model's joint test W1 must land
  // within 1.5x of the oracle's.
  const auto& ds = artifacts_->dataset;
  const auto& ae = artifacts_->ae;
  const auto& bundle = artifacts_->bundle;

  const nn::Tensor paired_latents = ae.encode(ds.paired.y);
  auto oracle = train::QuantileOracle::fit(ds.paired.x, paired_latents, 20);
  nn::Rng eta(555);
  const std::size_t nt = ds.test.x.rows();
  nn::Tensor oracle_latents = nn::Tensor::zeros({nt, 1});
  for (std::size_t i = 0; i < nt; ++i)
    oracle_latents.values[i] =
        oracle.sample(ds.test.x.values[i], eta.normal());
  const nn::Tensor oracle_y = ae.decoder.forward_values(oracle_latents);

  const double oracle_w1 =
      ot::w1_exact_equal(
          ot::EmpiricalSample::from_matrix(train::concat_xz(ds.test.x, ds.test.y)),
          ot::EmpiricalSample::from_matrix(train::concat_xz(ds.test.x, oracle_y)))
          .first;
  EXPECT_LE(record_->w1_joint_test, 1.5 * oracle_w1)
      << "trained " << record_->w1_joint_test << " oracle " << oracle_w1;
  (void)bundle;
}

TEST_F(TrainedCircleModel, ConditionalMeanAtHalfPi) {
  // E[Y | X = pi/2] = (e^{-sigma^2/2}, 0) with sigma = pi/10.
  nn::Rng eta(777);
  const auto samples = train::generate_conditional(
      artifacts_->bundle, nn::Tensor::row_vector({data::kPi / 2.0}), 2000, eta);
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    m0 += samples.at(i, 0);
    m1 += samples.at(i, 1);
  }
  m0 /= static_cast<double>(samples.rows());
  m1 /= static_cast<double>(samples.rows());
  const double sigma = data::kPi / 10.0;
  EXPECT_NEAR(m0, std::exp(-sigma * sigma / 2.0), 0.15);
  EXPECT_NEAR(m1, 0.0, 0.15);
}

TEST_F(TrainedCircleModel, CriticGradientNormInSanityBand) {
  EXPECT_GE(record_->critic_grad_norm_mean, 0.5);
  EXPECT_LE(record_->critic_grad_norm_mean, 1.5);
}

TEST_F(TrainedCircleModel, GeneratedSamplesNearSupport) {
  // The decoder range should hug the unit circle after semi-supervised
  // training; allow a loose budget since this is a single seed.
  EXPECT_LE(record_->range_sup_dist, 0.35);
}

TEST_F(TrainedCircleModel, ReconstructionIsTight) {
  EXPECT_LE(record_->recon_test, 0.1);
}
