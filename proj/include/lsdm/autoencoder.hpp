#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsdm/graph.hpp"
#include "lsdm/network.hpp"
#include "lsdm/optim.hpp"
#include "lsdm/rng.hpp"

namespace lsdm::train {

struct AutoencoderPair {
  nn::Network encoder;  // q -> m
  nn::Network decoder;  // m -> q
  std::size_t latent_dim = 0;

  nn::Tensor encode(const nn::Tensor& y) const {
    return encoder.forward_values(y);
  }
  nn::Tensor reconstruct(const nn::Tensor& y) const {
    return decoder.forward_values(encoder.forward_values(y));
  }
};

struct StepOneConfig {
  std::size_t epochs = 200;
  std::size_t batch = 64;
  nn::AdamConfig adam{1e-3, 0.9, 0.999};
  std::vector<std::size_t> milestones;  // empty: 30/50/75% of epochs
  double wae_lambda = 0.0;  // weight of the encoded-vs-prior matching penalty
  std::vector<std::size_t> hidden{64, 64};
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("step1: epochs must be >= 1");
    if (wae_lambda < 0.0)
      throw std::invalid_argument("step1: wae_lambda must be >= 0");
    if (wae_lambda > 0.0 && batch < 2)
      throw std::invalid_argument("step1: matching penalty needs batch >= 2");
    adam.validate();
  }

  std::vector<std::size_t> resolved_milestones() const {
    return milestones.empty() ? nn::default_milestones(epochs) : milestones;
  }
};

struct StepOneHistory {
  std::vector<double> recon;    // per-epoch mean reconstruction norm
  std::vector<double> penalty;  // per-epoch mean matching penalty
  std::vector<double> total;
};

/// Differentiable WAE-style penalty: exact matching W1 between an encoded
/// batch and a prior batch of equal size. The backward pass holds the
/// optimal matching fixed and differentiates the matched distances through
/// the encoded positions.
inline nn::Value wae_penalty(nn::Graph& g, nn::Value encoded,
                             nn::Tensor prior_batch) {
  if (encoded.tensor().rows() < 2)
    throw std::invalid_argument("wae_penalty: batch must be >= 2");
  return g.assignment_w1(encoded, std::move(prior_batch));
}

/// Step 1: minimize the mean Euclidean reconstruction norm over the pooled
/// responses, optionally plus wae_lambda times the per-batch matching W1
/// between encoded points and standard Gaussian prior draws. The short tail
/// batch of each epoch is dropped.
inline std::pair<AutoencoderPair, StepOneHistory> train_autoencoder(
    const nn::Tensor& y_all, std::size_t latent_dim, const StepOneConfig& cfg,
    const nn::Rng& rng) {
  cfg.validate();
  if (y_all.rank() != 2 || y_all.rows() == 0)
    throw std::invalid_argument("train_autoencoder: empty data");
  const std::size_t q = y_all.cols();
  const std::size_t batch = std::min<std::size_t>(cfg.batch, y_all.rows());
  if (latent_dim < 1)
    throw std::invalid_argument("train_autoencoder: latent_dim must be >= 1");

  nn::Rng init_e = rng.child("init_encoder");
  nn::Rng init_d = rng.child("init_decoder");
  nn::Rng shuffle_rng = rng.child("shuffle");
  nn::Rng prior_rng = rng.child("wae_prior");

  AutoencoderPair ae;
  ae.latent_dim = latent_dim;
  {
    std::vector<std::size_t> edims{q};
    edims.insert(edims.end(), cfg.hidden.begin(), cfg.hidden.end());
    edims.push_back(latent_dim);
    ae.encoder = nn::Network::build(
        nn::MlpSpec::make(edims, nn::LayerAct::leaky(0.2), nn::LayerAct::tanh()),
        init_e);
    std::vector<std::size_t> ddims{latent_dim};
    ddims.insert(ddims.end(), cfg.hidden.begin(), cfg.hidden.end());
    ddims.push_back(q);
    ae.decoder = nn::Network::build(
        nn::MlpSpec::make(ddims, nn::LayerAct::leaky(0.2), nn::LayerAct::linear()),
        init_d);
  }

  std::vector<nn::Tensor*> params;
  for (auto* p : ae.encoder.parameters()) params.push_back(p);
  for (auto* p : ae.decoder.parameters()) params.push_back(p);
  nn::AdamState adam(cfg.adam);
  const auto milestones = cfg.resolved_milestones();

  StepOneHistory hist;
  std::vector<std::size_t> order(y_all.rows());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.cfg.alpha = nn::lr_schedule_value(cfg.adam.alpha, epoch, milestones);
    shuffle_rng.shuffle(order);
    double recon_sum = 0.0, pen_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start + batch <= y_all.rows(); start += batch) {
      nn::Tensor yb = nn::Tensor::zeros({batch, q});
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t c = 0; c < q; ++c)
          yb.at(i, c) = y_all.at(order[start + i], c);

      nn::Graph g;
      auto pe = ae.encoder.bind(g);
      auto pd = ae.decoder.bind(g);
      nn::Value y = g.input(yb);
      nn::Value z = ae.encoder.forward(g, pe, y);
      nn::Value yhat = ae.decoder.forward(g, pd, z);
      nn::Value recon = g.mean_all(g.rownorm(g.sub(y, yhat)));
      nn::Value loss = recon;
      double pen_val = 0.0;
      if (cfg.wae_lambda > 0.0) {
        nn::Tensor prior = nn::Tensor::zeros({batch, latent_dim});
        for (auto& v : prior.values) v = prior_rng.normal();
        nn::Value pen = wae_penalty(g, z, std::move(prior));
        pen_val = pen.scalar();
        loss = g.add(loss, g.scalar_mul(pen, cfg.wae_lambda));
      }
      if (!std::isfinite(loss.scalar()))
        throw std::runtime_error("train_autoencoder: non-finite loss at epoch " +
                                 std::to_string(epoch));
      auto grads = g.backward(loss);
      std::vector<nn::Tensor> gvals;
      gvals.reserve(params.size());
      for (std::size_t i = 0; i < pe.size(); ++i) gvals.push_back(grads.get(pe[i]));
      for (std::size_t i = 0; i < pd.size(); ++i) gvals.push_back(grads.get(pd[i]));
      nn::adam_step(params, gvals, adam);

      recon_sum += recon.scalar();
      pen_sum += pen_val;
      ++steps;
    }
    if (steps == 0)
      throw std::invalid_argument("train_autoencoder: batch larger than data");
    hist.recon.push_back(recon_sum / static_cast<double>(steps));
    hist.penalty.push_back(pen_sum / static_cast<double>(steps));
    hist.total.push_back(hist.recon.back() +
                         cfg.wae_lambda * hist.penalty.back());
  }
  return {std::move(ae), std::move(hist)};
}

}  // namespace lsdm::train
