#include <gtest/gtest.h>

#include <cmath>

#include "lsdm/autoencoder.hpp"
#include "lsdm/data.hpp"
#include "lsdm/ot.hpp"

using namespace lsdm;

TEST(WaePenalty, EqualBatchesGiveZeroValueAndGradient) {
  nn::Graph g;
  nn::Tensor pts = nn::Tensor::matrix(3, 1, {0.1, -0.4, 0.9});
  nn::Value e = g.parameter(pts);
  nn::Value pen = train::wae_penalty(g, e, pts);
  EXPECT_DOUBLE_EQ(pen.scalar(), 0.0);
  auto grads = g.backward(pen);
  for (double v : grads.get(e).values) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(WaePenalty, ConstantShiftGradient) {
  // encoded = prior + c: value |c|, gradient sign(c) / n per point.
  const double c = 0.35;
  const std::size_t n = 4;
  nn::Tensor prior = nn::Tensor::matrix(n, 1, {-1.0, -0.2, 0.3, 1.2});
  nn::Tensor enc = prior;
  for (auto& v : enc.values) v += c;
  nn::Graph g;
  nn::Value e = g.parameter(enc);
  nn::Value pen = train::wae_penalty(g, e, prior);
  EXPECT_NEAR(pen.scalar(), c, 1e-12);
  auto grads = g.backward(pen);
  for (double v : grads.get(e).values)
    EXPECT_NEAR(v, 1.0 / static_cast<double>(n), 1e-12);
}

TEST(WaePenalty, BatchBelowTwoRejected) {
  nn::Graph g;
  nn::Tensor one = nn::Tensor::matrix(1, 1, {0.0});
  nn::Value e = g.parameter(one);
  EXPECT_THROW(train::wae_penalty(g, e, one), std::invalid_argument);
}

TEST(WaePenalty, GradientMatchesFiniteDifferences) {
  nn::Rng rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 8, d = 2;
    nn::Tensor enc = nn::Tensor::zeros({n, d});
    nn::Tensor prior = nn::Tensor::zeros({n, d});
    for (auto& v : enc.values) v = rng.uniform(-1.0, 1.0);
    for (auto& v : prior.values) v = rng.uniform(-1.0, 1.0);

    nn::Graph g;
    nn::Value e = g.parameter(enc);
    nn::Value pen = train::wae_penalty(g, e, prior);
    auto grads = g.backward(pen);
    const nn::Tensor ad = grads.get(e);

    auto value_at = [&](const nn::Tensor& pts) {
      nn::Graph g2;
      return train::wae_penalty(g2, g2.constant(pts), prior).scalar();
    };
    const double h = 1e-5;
    for (std::size_t k = 0; k < enc.size(); ++k) {
      nn::Tensor up = enc, dn = enc;
      up.values[k] += h;
      dn.values[k] -= h;
      const double fd = (value_at(up) - value_at(dn)) / (2.0 * h);
      const double err = std::abs(fd - ad.values[k]);
      const double rel = std::abs(ad.values[k]) < 1e-8
                             ? err
                             : err / std::abs(ad.values[k]);
      EXPECT_LE(rel, 1e-4) << "element " << k;
    }
  }
}

TEST(TrainAutoencoder, ConstantDatasetReconstructs) {
  nn::Tensor y = nn::Tensor::zeros({64, 2});
  for (std::size_t i = 0; i < 64; ++i) {
    y.at(i, 0) = 0.3;
    y.at(i, 1) = -0.7;
  }
  train::StepOneConfig cfg;
  cfg.epochs = 200;
  cfg.batch = 64;
  auto [ae, hist] = train::train_autoencoder(y, 1, cfg, nn::Rng(5));
  EXPECT_LE(hist.recon.back(), 1e-3);
}

TEST(TrainAutoencoder, RankOneDataAgainstPcaOracle) {
  // y = (t, t) on a line: a one-dimensional code reconstructs exactly in
  // principle (PCA attains zero), so the trained loss must be small.
  nn::Rng data_rng(7);
  nn::Tensor y = nn::Tensor::zeros({256, 2});
  for (std::size_t i = 0; i < 256; ++i) {
    const double t = data_rng.uniform();
    y.at(i, 0) = t;
    y.at(i, 1) = t;
  }
  train::StepOneConfig cfg;
  cfg.epochs = 150;
  auto [ae, hist] = train::train_autoencoder(y, 1, cfg, nn::Rng(6));
  EXPECT_LE(hist.recon.back(), 0.01);
}

TEST(TrainAutoencoder, EmptyDataRejected) {
  train::StepOneConfig cfg;
  EXPECT_THROW(
      train::train_autoencoder(nn::Tensor::zeros({0, 2}), 1, cfg, nn::Rng(0)),
      std::invalid_argument);
}

TEST(TrainAutoencoder, WaeRegularizationShrinksPriorDistance) {
  // Paired-seed comparison: with the matching penalty on, the final encoded
  // batch sits closer to the Gaussian prior in every one of 5 seeds.
  std::size_t wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    data::CircleModelConfig dcfg;
    dcfg.n = 256;
    dcfg.N = 0;
    dcfg.test_size = 1;
    auto ds = data::sample_circle_model(dcfg, nn::Rng(seed));

    auto final_prior_w1 = [&](double lambda) {
      train::StepOneConfig cfg;
      cfg.epochs = 80;
      cfg.wae_lambda = lambda;
      auto [ae, hist] =
          train::train_autoencoder(ds.paired.y, 1, cfg, nn::Rng(seed + 100));
      const nn::Tensor enc = ae.encode(ds.paired.y);
      nn::Rng prior_rng(seed + 200);
      nn::Tensor prior = nn::Tensor::zeros({enc.rows(), 1});
      for (auto& v : prior.values) v = prior_rng.normal();
      return ot::w1_exact_equal(ot::EmpiricalSample::from_matrix(enc),
                                ot::EmpiricalSample::from_matrix(prior))
          .first;
    };
    if (final_prior_w1(1.0) < final_prior_w1(0.0)) ++wins;
  }
  EXPECT_GE(wins, 5u);
}

TEST(TrainAutoencoder, HistoryLengthsMatchEpochs) {
  nn::Tensor y = nn::Tensor::zeros({32, 2});
  nn::Rng r(3);
  for (auto& v : y.values) v = r.normal();
  train::StepOneConfig cfg;
  cfg.epochs = 7;
  cfg.batch = 16;
  auto [ae, hist] = train::train_autoencoder(y, 1, cfg, nn::Rng(1));
  EXPECT_EQ(hist.recon.size(), 7u);
  EXPECT_EQ(hist.total.size(), 7u);
}
