#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lsdm/checkpoint.hpp"
#include "lsdm/generator.hpp"

using namespace lsdm;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Checkpoint, MlpRoundTripBitExact) {
  nn::Rng rng(1);
  auto net = nn::Network::build(
      nn::MlpSpec::make({3, 9, 2}, nn::LayerAct::leaky(0.2), nn::LayerAct::tanh()),
      rng);
  const std::string path = tmp_path("ckpt_mlp.json");
  io::save_mlp(path, net);
  nn::Network loaded = io::load_mlp(path);

  nn::Rng data(2);
  for (int rep = 0; rep < 100; ++rep) {
    nn::Tensor x = nn::Tensor::zeros({1, 3});
    for (auto& v : x.values) v = data.normal();
    const auto a = net.forward_values(x);
    const auto b = loaded.forward_values(x);
    EXPECT_EQ(a.values, b.values);
  }
  std::remove(path.c_str());
}

TEST(Checkpoint, EmaShadowRoundTrip) {
  nn::Rng rng(3);
  auto net = nn::Network::build(
      nn::MlpSpec::make({2, 4, 1}, nn::LayerAct::relu(), nn::LayerAct::linear()),
      rng);
  nn::EmaState ema(0.97, net.parameters());
  for (auto& s : ema.shadow)
    for (auto& v : s.values) v += 0.125;
  const std::string path = tmp_path("ckpt_ema.json");
  io::save_mlp(path, net, &ema);
  nn::EmaState back;
  nn::Network loaded = io::load_mlp(path, &back);
  EXPECT_DOUBLE_EQ(back.decay, 0.97);
  ASSERT_EQ(back.shadow.size(), ema.shadow.size());
  for (std::size_t i = 0; i < ema.shadow.size(); ++i)
    EXPECT_EQ(back.shadow[i].values, ema.shadow[i].values);
  std::remove(path.c_str());
}

TEST(Checkpoint, TruncatedFileIsMalformed) {
  nn::Rng rng(4);
  auto net = nn::Network::build(
      nn::MlpSpec::make({2, 2}, nn::LayerAct::relu(), nn::LayerAct::relu()), rng);
  const std::string path = tmp_path("ckpt_trunc.json");
  io::save_mlp(path, net);
  std::string text;
  {
    std::ifstream in(path);
    std::getline(in, text);
  }
  {
    std::ofstream out(path, std::ios::trunc);
    out << text.substr(0, text.size() / 2);
  }
  EXPECT_THROW(
      {
        try {
          io::load_mlp(path);
        } catch (const std::runtime_error& e) {
          EXPECT_NE(std::string(e.what()).find("malformed"), std::string::npos);
          throw;
        }
      },
      std::runtime_error);
  std::remove(path.c_str());
}

TEST(Checkpoint, VersionMismatchNamesBothVersions) {
  const std::string path = tmp_path("ckpt_ver.json");
  {
    std::ofstream out(path, std::ios::trunc);
    out << "{\"version\":2,\"kind\":\"mlp\",\"dims\":[1,1],\"activations\":"
           "[\"linear\"],\"weights\":[[1.0]],\"biases\":[[0.0]]}";
  }
  try {
    io::load_mlp(path);
    FAIL() << "expected version mismatch";
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("version 2"), std::string::npos);
    EXPECT_NE(msg.find("version 1"), std::string::npos);
  }
  std::remove(path.c_str());
}

TEST(Checkpoint, ShapeInconsistencyRejected) {
  const std::string path = tmp_path("ckpt_shape.json");
  {
    std::ofstream out(path, std::ios::trunc);
    out << "{\"version\":1,\"kind\":\"mlp\",\"dims\":[2,1],\"activations\":"
           "[\"linear\"],\"weights\":[[1.0]],\"biases\":[[0.0]]}";
  }
  EXPECT_THROW(
      {
        try {
          io::load_mlp(path);
        } catch (const std::runtime_error& e) {
          EXPECT_NE(std::string(e.what()).find("shape"), std::string::npos);
          throw;
        }
      },
      std::runtime_error);
  std::remove(path.c_str());
}

TEST(Checkpoint, ScoreNetRoundTrip) {
  diffusion::DiffusionConfig cfg;
  cfg.hidden = {8};
  nn::Rng rng(5);
  auto s = diffusion::ScoreNet::build(1, 1, cfg, rng);
  const std::string path = tmp_path("ckpt_score.json");
  io::save_score(path, s, cfg);
  EXPECT_EQ(io::peek_kind(path), "score_mlp");
  auto [loaded, lcfg] = io::load_score(path);
  EXPECT_EQ(lcfg.steps, cfg.steps);
  EXPECT_DOUBLE_EQ(lcfg.horizon, cfg.horizon);
  nn::Tensor z = nn::Tensor::matrix(2, 1, {0.1, -0.4});
  nn::Tensor x = nn::Tensor::matrix(2, 1, {0.0, 1.0});
  EXPECT_EQ(s.forward_values(z, x, {0.5, 1.0}).values,
            loaded.forward_values(z, x, {0.5, 1.0}).values);
  std::remove(path.c_str());
}

TEST(Checkpoint, BundleRoundTripReproducesGeneration) {
  const std::size_t n = 32;
  nn::Tensor x = nn::Tensor::zeros({n, 1});
  nn::Tensor y = nn::Tensor::zeros({n, 2});
  nn::Rng data(6);
  for (auto& v : x.values) v = data.uniform();
  for (auto& v : y.values) v = data.normal();
  nn::Rng ae_rng(7);
  train::AutoencoderPair ae;
  ae.latent_dim = 1;
  ae.encoder = nn::Network::build(
      nn::MlpSpec::make({2, 8, 1}, nn::LayerAct::leaky(0.2), nn::LayerAct::tanh()),
      ae_rng);
  ae.decoder = nn::Network::build(
      nn::MlpSpec::make({1, 8, 2}, nn::LayerAct::leaky(0.2), nn::LayerAct::linear()),
      ae_rng);
  train::StepTwoConfig cfg;
  cfg.epochs = 4;
  cfg.batch = 16;
  auto bundle = train::train_latent_generator(x, y, ae, cfg, nn::Rng(8));

  const std::string path = tmp_path("ckpt_bundle.json");
  io::save_bundle(path, bundle);
  EXPECT_EQ(io::peek_kind(path), "bundle");
  auto loaded = io::load_bundle(path);

  nn::Rng eta1(9), eta2(9);
  nn::Tensor probe = nn::Tensor::row_vector({0.4});
  const auto a = train::generate_conditional(bundle, probe, 8, eta1);
  const auto b = train::generate_conditional(loaded, probe, 8, eta2);
  EXPECT_EQ(a.values, b.values);
  std::remove(path.c_str());
}
