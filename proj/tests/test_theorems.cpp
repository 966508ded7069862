#include <gtest/gtest.h>

#include <cmath>

#include "lsdm/data.hpp"
#include "lsdm/theorems.hpp"
#include "lsdm/verify.hpp"

using namespace lsdm;

namespace {

nn::Network identity_net(std::size_t dim) {
  nn::Rng rng(0);
  nn::MlpSpec spec;
  spec.dims = {dim, dim};
  spec.acts = {nn::LayerAct::linear()};
  spec.init = nn::Init::identity;
  return nn::Network::build(spec, rng);
}

nn::Network scaling_net(double factor) {
  nn::Network net = identity_net(1);
  net.weight(0).values = {factor};
  return net;
}

}  // namespace

TEST(Theorem1, HandCaseAllZero) {
  // X = (0, 1), Y = (0, 1) scalar, E = D = id, H(x) = x: all terms vanish.
  train::AutoencoderPair ae;
  ae.encoder = identity_net(1);
  ae.decoder = identity_net(1);
  ae.latent_dim = 1;
  train::GeneratorBundle bundle;
  bundle.decoder = ae.decoder;
  bundle.encoder = ae.encoder;
  bundle.latent_dim = 1;
  bundle.noise_dim = 0;
  bundle.latent_gen = identity_net(1);
  bundle.ema = nn::EmaState(0.5, bundle.latent_gen.parameters());
  nn::Tensor x = nn::Tensor::matrix(2, 1, {0.0, 1.0});
  nn::Tensor y = nn::Tensor::matrix(2, 1, {0.0, 1.0});
  bundle.scaler.offset = {0.0};
  bundle.scaler.scale = {1.0};
  nn::Rng rng(1);
  auto r = train::theorem1_decomposition(ae, bundle, x, y, rng);
  EXPECT_NEAR(r.joint_w1, 0.0, 1e-12);
  EXPECT_NEAR(r.recon_term, 0.0, 1e-12);
  EXPECT_NEAR(r.matched_w1, 0.0, 1e-12);
  EXPECT_TRUE(r.inequality_holds);
}

TEST(Theorem1, RandomModelsAlwaysHold) {
  auto c = verify::check_theorem1_random(201, 50);
  EXPECT_EQ(c.passed, c.total);
  EXPECT_LE(c.worst_slack, 1e-9);
}

TEST(Theorem2, ScalingDecoderTightCase) {
  // D(z) = 2z on Diracs at 0 and 1: latent W1 = 1, decoded W1 = 2 = K.
  auto r = train::theorem2_check(scaling_net(2.0),
                                 ot::EmpiricalSample(1, 1, {0.0}),
                                 ot::EmpiricalSample(1, 1, {1.0}));
  EXPECT_NEAR(r.w1_latent, 1.0, 1e-12);
  EXPECT_NEAR(r.w1_decoded, 2.0, 1e-12);
  EXPECT_NEAR(r.lipschitz_bound, 2.0, 1e-9);
  EXPECT_TRUE(r.holds);
}

TEST(Theorem2, IdentityDecoderEquality) {
  nn::Rng rng(4);
  auto a = verify::detail::random_cloud(6, 1, rng);
  auto b = verify::detail::random_cloud(6, 1, rng);
  auto r = train::theorem2_check(identity_net(1), a, b);
  EXPECT_NEAR(r.w1_decoded, r.w1_latent, 1e-12);
  EXPECT_TRUE(r.holds);
}

TEST(Theorem2, RandomDecodersAlwaysHold) {
  auto c = verify::check_theorem2_random(202, 100);
  EXPECT_EQ(c.passed, c.total);
}

TEST(RangeProximity, ConstantDecoders) {
  auto on_circle = [](const double* y, std::size_t) {
    return data::dist_to_circle_support(y[0], y[1], 0.0);
  };
  // Decoder mapping everything to (1, 0): on the unit circle.
  nn::Rng rng(0);
  nn::MlpSpec spec;
  spec.dims = {1, 2};
  spec.acts = {nn::LayerAct::linear()};
  auto dec = nn::Network::build(spec, rng);
  dec.weight(0).values = {0.0, 0.0};
  dec.bias(0).values = {1.0, 0.0};
  ot::EmpiricalSample probes(5, 1, {-1.0, -0.5, 0.0, 0.5, 1.0});
  EXPECT_NEAR(train::range_proximity(dec, probes, on_circle), 0.0, 1e-12);

  dec.bias(0).values = {0.0, 0.0};  // constant at the origin
  EXPECT_NEAR(train::range_proximity(dec, probes, on_circle), 1.0, 1e-12);
}

TEST(RangeProximity, EmptyProbesRejected) {
  auto dec = identity_net(1);
  EXPECT_THROW(train::range_proximity(
                   dec, ot::EmpiricalSample(),
                   [](const double*, std::size_t) { return 0.0; }),
               std::invalid_argument);
}

TEST(QuantileOracle, PointMassCells) {
  // Z | X = x is a point mass at x for two discrete predictor values.
  nn::Tensor x = nn::Tensor::matrix(6, 1, {0, 0, 0, 1, 1, 1});
  nn::Tensor z = nn::Tensor::matrix(6, 1, {0, 0, 0, 1, 1, 1});
  auto oracle = train::QuantileOracle::fit(x, z, 2);
  nn::Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    EXPECT_DOUBLE_EQ(oracle.sample(0.0, rng.normal()), 0.0);
    EXPECT_DOUBLE_EQ(oracle.sample(1.0, rng.normal()), 1.0);
  }
}

TEST(QuantileOracle, GaussianCellRecoversAffineMap) {
  // With exact Gaussian quantiles in the cell, H*(x, eta) = mu + sigma eta
  // because Phi then its inverse cancel. Build the cell from the exact
  // quantile grid so the empirical quantile function is the true one.
  const double mu = 0.7, sigma = 0.4;
  const std::size_t k = 4001;
  std::vector<double> cell(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
    cell[i] = mu + sigma * train::normal_quantile(u);
  }
  nn::Tensor x = nn::Tensor::zeros({k, 1});
  nn::Tensor z = nn::Tensor::matrix(k, 1, cell);
  auto oracle = train::QuantileOracle::fit(x, z, 1);
  nn::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double eta = rng.normal();
    if (std::abs(eta) > 3.0) continue;
    EXPECT_NEAR(oracle.sample(0.0, eta), mu + sigma * eta, 2e-3);
  }
}

TEST(QuantileOracle, EmptyCellRejected) {
  nn::Tensor x = nn::Tensor::matrix(3, 1, {0.0, 0.0, 1.0});
  nn::Tensor z = nn::Tensor::matrix(3, 1, {0.1, 0.2, 0.3});
  EXPECT_THROW(train::QuantileOracle::fit(x, z, 8), std::invalid_argument);
}

TEST(QuantileOracle, CircleAchievabilityBudget) {
  auto c = verify::check_quantile_achievability(203);
  EXPECT_TRUE(c.ok()) << "w1 slack " << c.worst_slack;
}

TEST(NormalQuantile, InvertsCdf) {
  for (double x : {-3.0, -1.2, -0.3, 0.0, 0.4, 1.7, 3.3}) {
    EXPECT_NEAR(train::normal_quantile(train::normal_cdf(x)), x, 1e-9);
  }
  EXPECT_THROW(train::normal_quantile(0.0), std::invalid_argument);
}
