#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsdm/autoencoder.hpp"
#include "lsdm/graph.hpp"
#include "lsdm/network.hpp"
#include "lsdm/optim.hpp"
#include "lsdm/rng.hpp"

namespace lsdm::train {

enum class Variant { clsdm, dlsdm };
enum class MatchObjective { w1_gp, js, kl };
enum class GpMode { interpolate, real_point };

inline const char* variant_name(Variant v) {
  return v == Variant::clsdm ? "clsdm" : "dlsdm";
}
inline const char* objective_name(MatchObjective o) {
  switch (o) {
    case MatchObjective::w1_gp: return "w1";
    case MatchObjective::js: return "js";
    case MatchObjective::kl: return "kl";
  }
  return "?";
}

struct StepTwoConfig {
  Variant variant = Variant::clsdm;
  MatchObjective divergence = MatchObjective::w1_gp;
  std::size_t critic_iters = 5;  // J
  double gp_lambda = 10.0;
  GpMode gp_mode = GpMode::interpolate;
  std::size_t epochs = 200;
  std::size_t batch = 25;
  nn::AdamConfig gen_adam{3e-4, 0.0, 0.9};
  nn::AdamConfig critic_adam{3e-4, 0.0, 0.9};
  std::vector<std::size_t> milestones;  // empty: 30/50/75% of epochs
  std::size_t noise_dim = 2;            // d
  double ema_decay = 0.999;
  std::vector<std::size_t> gen_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{128, 128};
  std::uint64_t seed = 0;

  void validate() const {
    if (critic_iters < 1)
      throw std::invalid_argument("step2: critic_iters must be >= 1");
    if (gp_lambda < 0.0)
      throw std::invalid_argument("step2: gp_lambda must be >= 0");
    gen_adam.validate();
    critic_adam.validate();
  }

  std::vector<std::size_t> resolved_milestones() const {
    return milestones.empty() ? nn::default_milestones(epochs) : milestones;
  }
};

enum class TrainOutcome { ok, diverged };

struct StepTwoHistory {
  std::vector<double> critic_loss;      // per epoch
  std::vector<double> generator_loss;   // per epoch
  std::vector<double> critic_gap;       // mean f(fake) - mean f(real)
  std::vector<double> grad_norm_mean;   // critic input-gradient norm at penalty points
};

/// Per-predictor affine map onto [0, 1] fitted on the paired predictors.
struct PredictorScaler {
  std::vector<double> offset, scale;

  static PredictorScaler fit(const nn::Tensor& x) {
    PredictorScaler s;
    const std::size_t p = x.cols();
    s.offset.assign(p, 0.0);
    s.scale.assign(p, 1.0);
    for (std::size_t c = 0; c < p; ++c) {
      double lo = x.at(0, c), hi = x.at(0, c);
      for (std::size_t r = 1; r < x.rows(); ++r) {
        lo = std::min(lo, x.at(r, c));
        hi = std::max(hi, x.at(r, c));
      }
      s.offset[c] = lo;
      s.scale[c] = hi > lo ? 1.0 / (hi - lo) : 1.0;
    }
    return s;
  }

  nn::Tensor apply(const nn::Tensor& x) const {
    nn::Tensor out = x;
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c)
        out.at(r, c) = (x.at(r, c) - offset[c]) * scale[c];
    return out;
  }
};

/// Everything needed to generate: frozen autoencoder, latent generator with
/// its EMA shadow, predictor scaling and the configs that produced them.
struct GeneratorBundle {
  nn::Network decoder;
  nn::Network encoder;
  nn::Network latent_gen;  // raw final weights
  nn::EmaState ema;        // shadow used at inference
  PredictorScaler scaler;
  std::size_t latent_dim = 0;
  std::size_t noise_dim = 0;
  StepTwoConfig cfg;
  StepOneConfig step1_cfg;
  std::uint64_t seed = 0;
  TrainOutcome outcome = TrainOutcome::ok;
  std::size_t diverged_at_step = 0;
  StepTwoHistory history;

  /// Latent generator with the EMA weights materialized.
  nn::Network ema_generator() const {
    nn::Network g = latent_gen;
    g.set_parameters(ema.shadow);
    return g;
  }
};

/// Gradient-penalty term lambda * mean (|grad f| - 1)^2, as a graph node.
/// interpolate: evaluated at per-sample convex combinations of real and
/// fake points; real_point: evaluated at the real points. The penalty input
/// is (x, z) jointly and is differentiable in the critic parameters through
/// the emitted gradient nodes.
inline nn::Value gradient_penalty_term(nn::Graph& g, const nn::Network& critic,
                                       const std::vector<nn::Value>& critic_params,
                                       const nn::Tensor& x_batch,
                                       const nn::Tensor& z_real,
                                       const nn::Tensor& z_fake, double lambda,
                                       GpMode mode, nn::Rng& rng) {
  if (lambda < 0.0)
    throw std::invalid_argument("gradient_penalty: lambda must be >= 0");
  if (z_real.rows() != x_batch.rows() || z_fake.rows() != x_batch.rows() ||
      z_real.cols() != z_fake.cols())
    throw std::invalid_argument("gradient_penalty: batch shapes misaligned");
  const std::size_t b = x_batch.rows(), p = x_batch.cols(), m = z_real.cols();
  nn::Tensor point = nn::Tensor::zeros({b, p + m});
  for (std::size_t r = 0; r < b; ++r) {
    const double eps = mode == GpMode::interpolate ? rng.uniform() : 1.0;
    for (std::size_t c = 0; c < p; ++c) point.at(r, c) = x_batch.at(r, c);
    for (std::size_t c = 0; c < m; ++c)
      point.at(r, p + c) =
          eps * z_real.at(r, c) + (1.0 - eps) * z_fake.at(r, c);
  }
  nn::Value v = g.input(std::move(point));
  nn::Value score = critic.forward(g, critic_params, v);
  if (score.tensor().cols() != 1)
    throw std::invalid_argument("gradient_penalty: critic output not scalar per sample");
  nn::Value grad = g.input_gradient_node(score, v);
  nn::Value gap = g.scalar_add(g.rownorm(grad), -1.0);
  return g.scalar_mul(g.mean_all(g.square(gap)), lambda);
}

/// Mean critic input-gradient norm at interpolates; diagnostic only.
inline double critic_grad_norm_mean(const nn::Network& critic,
                                    const nn::Tensor& x_batch,
                                    const nn::Tensor& z_real,
                                    const nn::Tensor& z_fake, nn::Rng& rng) {
  nn::Graph g;
  auto params = critic.bind_frozen(g);
  const std::size_t b = x_batch.rows(), p = x_batch.cols(), m = z_real.cols();
  nn::Tensor point = nn::Tensor::zeros({b, p + m});
  for (std::size_t r = 0; r < b; ++r) {
    const double eps = rng.uniform();
    for (std::size_t c = 0; c < p; ++c) point.at(r, c) = x_batch.at(r, c);
    for (std::size_t c = 0; c < m; ++c)
      point.at(r, p + c) = eps * z_real.at(r, c) + (1.0 - eps) * z_fake.at(r, c);
  }
  nn::Value v = g.input(std::move(point));
  nn::Value norms = g.rownorm(g.input_gradient_node(critic.forward(g, params, v), v));
  return g.mean_all(norms).scalar();
}

struct NonFiniteLoss {
  std::size_t step;
};

inline NonFiniteLoss nonfinite_error(std::size_t step) { return {step}; }

inline nn::Tensor concat_xz(const nn::Tensor& x, const nn::Tensor& z) {
  nn::Tensor out = nn::Tensor::zeros({x.rows(), x.cols() + z.cols()});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(r, c);
    for (std::size_t c = 0; c < z.cols(); ++c)
      out.at(r, x.cols() + c) = z.at(r, c);
  }
  return out;
}

namespace detail {

inline nn::Tensor rows_of(const nn::Tensor& src,
                          const std::vector<std::size_t>& order,
                          std::size_t start, std::size_t count) {
  nn::Tensor out = nn::Tensor::zeros({count, src.cols()});
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t c = 0; c < src.cols(); ++c)
      out.at(i, c) = src.at(order[start + i], c);
  return out;
}

}  // namespace detail

/// Step 2: adversarial distribution matching on the paired data with the
/// autoencoder frozen. cLSDM compares decoded pairs (x, D(H(x, eta))) with
/// (x, D(E(y))); dLSDM compares latents (x, H(x, eta)) with (x, E(y)).
/// Per outer step the batch and its noise are sampled once, the critic takes
/// J updates, then the generator takes one; generator weights are tracked by
/// EMA. A non-finite loss ends training with outcome = diverged.
inline GeneratorBundle train_latent_generator(const nn::Tensor& x_paired,
                                              const nn::Tensor& y_paired,
                                              const AutoencoderPair& ae,
                                              const StepTwoConfig& cfg,
                                              const nn::Rng& rng) {
  cfg.validate();
  const std::size_t n = x_paired.rows();
  if (n == 0 || y_paired.rows() != n)
    throw std::invalid_argument("train_latent_generator: bad paired data");
  const std::size_t batch = std::min<std::size_t>(cfg.batch, n);
  const std::size_t p = x_paired.cols();
  const std::size_t m = ae.latent_dim;
  const std::size_t q = y_paired.cols();
  const std::size_t target_dim = cfg.variant == Variant::clsdm ? q : m;

  GeneratorBundle bundle;
  bundle.decoder = ae.decoder;
  bundle.encoder = ae.encoder;
  bundle.scaler = PredictorScaler::fit(x_paired);
  bundle.latent_dim = m;
  bundle.noise_dim = cfg.noise_dim;
  bundle.cfg = cfg;
  bundle.seed = rng.seed();

  nn::Rng init_h = rng.child("init_generator");
  nn::Rng init_c = rng.child("init_critic");
  nn::Rng noise_rng = rng.child("noise");
  nn::Rng shuffle_rng = rng.child("shuffle");
  nn::Rng gp_rng = rng.child("gp_eps");

  {
    std::vector<std::size_t> hdims{p + cfg.noise_dim};
    hdims.insert(hdims.end(), cfg.gen_hidden.begin(), cfg.gen_hidden.end());
    hdims.push_back(m);
    bundle.latent_gen = nn::Network::build(
        nn::MlpSpec::make(hdims, nn::LayerAct::leaky(0.2), nn::LayerAct::tanh()),
        init_h);
  }
  nn::Network critic;
  {
    std::vector<std::size_t> cdims{p + target_dim};
    cdims.insert(cdims.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
    cdims.push_back(1);
    critic = nn::Network::build(
        nn::MlpSpec::make(cdims, nn::LayerAct::leaky(0.2), nn::LayerAct::linear()),
        init_c);
  }

  // Frozen targets: Z_i = D(E(y_i)) for cLSDM, E(y_i) for dLSDM.
  const nn::Tensor x_scaled = bundle.scaler.apply(x_paired);
  const nn::Tensor latents = ae.encode(y_paired);
  const nn::Tensor targets = cfg.variant == Variant::clsdm
                                 ? ae.decoder.forward_values(latents)
                                 : latents;

  nn::AdamState gen_adam(cfg.gen_adam), critic_adam(cfg.critic_adam);
  // Zero-initialized shadow with bias correction at read-out, so short runs
  // are not shrunk toward the random init.
  nn::EmaState ema(cfg.ema_decay, bundle.latent_gen.parameters());
  for (auto& s : ema.shadow)
    for (auto& v : s.values) v = 0.0;
  std::size_t ema_updates = 0;
  const auto milestones = cfg.resolved_milestones();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t global_step = 0;

  auto fake_batch = [&](const nn::Tensor& xb, const nn::Tensor& eta) {
    nn::Tensor in = nn::Tensor::zeros({xb.rows(), p + cfg.noise_dim});
    for (std::size_t r = 0; r < xb.rows(); ++r) {
      for (std::size_t c = 0; c < p; ++c) in.at(r, c) = xb.at(r, c);
      for (std::size_t c = 0; c < cfg.noise_dim; ++c)
        in.at(r, p + c) = eta.at(r, c);
    }
    return in;
  };

  try {
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      gen_adam.cfg.alpha =
          nn::lr_schedule_value(cfg.gen_adam.alpha, epoch, milestones);
      critic_adam.cfg.alpha =
          nn::lr_schedule_value(cfg.critic_adam.alpha, epoch, milestones);
      shuffle_rng.shuffle(order);
      double closs_sum = 0.0, gloss_sum = 0.0, gap_sum = 0.0, gn_sum = 0.0;
      std::size_t steps = 0, gn_steps = 0;

      for (std::size_t start = 0; start + batch <= n; start += batch) {
        const nn::Tensor xb = detail::rows_of(x_scaled, order, start, batch);
        const nn::Tensor zb = detail::rows_of(targets, order, start, batch);
        nn::Tensor eta = nn::Tensor::zeros({batch, cfg.noise_dim});
        for (auto& v : eta.values) v = noise_rng.normal();
        const nn::Tensor gen_in = fake_batch(xb, eta);

        double last_closs = 0.0, last_gap = 0.0;
        for (std::size_t j = 0; j < cfg.critic_iters; ++j) {
          // Fake samples are plain values here; no gradient reaches H.
          nn::Tensor h_out = bundle.latent_gen.forward_values(gen_in);
          nn::Tensor fake = cfg.variant == Variant::clsdm
                                ? bundle.decoder.forward_values(h_out)
                                : h_out;

          nn::Graph g;
          auto cp = critic.bind(g);
          nn::Value vr = g.input(concat_xz(xb, zb));
          nn::Value vf = g.input(concat_xz(xb, fake));
          nn::Value fr = g.mean_all(critic.forward(g, cp, vr));
          nn::Value ff = g.mean_all(critic.forward(g, cp, vf));
          nn::Value loss{};
          switch (cfg.divergence) {
            case MatchObjective::w1_gp: {
              loss = g.sub(fr, ff);
              if (cfg.gp_lambda > 0.0)
                loss = g.add(loss, gradient_penalty_term(
                                       g, critic, cp, xb, zb, fake,
                                       cfg.gp_lambda, cfg.gp_mode, gp_rng));
              break;
            }
            case MatchObjective::js: {
              nn::Value fr_all = critic.forward(g, cp, vr);
              nn::Value ff_all = critic.forward(g, cp, vf);
              loss = g.add(g.mean_all(g.softplus(g.neg(fr_all))),
                           g.mean_all(g.softplus(ff_all)));
              break;
            }
            case MatchObjective::kl: {
              nn::Value ff_all = critic.forward(g, cp, vf);
              loss = g.sub(g.mean_all(g.exp_fn(g.scalar_add(ff_all, -1.0))), fr);
              break;
            }
          }
          last_closs = loss.scalar();
          last_gap = ff.scalar() - fr.scalar();
          if (!std::isfinite(last_closs)) throw nonfinite_error(global_step);
          auto grads = g.backward(loss);
          std::vector<nn::Tensor> gv;
          for (auto& v : cp) gv.push_back(grads.get(v));
          nn::adam_step(critic.parameters(), gv, critic_adam);
        }

        // Generator update through the frozen critic (and decoder for cLSDM).
        {
          nn::Graph g;
          auto hp = bundle.latent_gen.bind(g);
          auto cp = critic.bind_frozen(g);
          nn::Value gin = g.input(gen_in);
          nn::Value h = bundle.latent_gen.forward(g, hp, gin);
          nn::Value fake = h;
          if (cfg.variant == Variant::clsdm) {
            auto dp = bundle.decoder.bind_frozen(g);
            fake = bundle.decoder.forward(g, dp, h);
          }
          nn::Value vf = g.concat_cols(g.constant(xb), fake);
          nn::Value ff_all = critic.forward(g, cp, vf);
          nn::Value loss{};
          switch (cfg.divergence) {
            case MatchObjective::w1_gp:
              loss = g.mean_all(ff_all);
              break;
            case MatchObjective::js:
              loss = g.mean_all(g.softplus(g.neg(ff_all)));
              break;
            case MatchObjective::kl:
              loss = g.neg(g.mean_all(g.exp_fn(g.scalar_add(ff_all, -1.0))));
              break;
          }
          const double gloss = loss.scalar();
          if (!std::isfinite(gloss)) throw nonfinite_error(global_step);
          auto grads = g.backward(loss);
          std::vector<nn::Tensor> gv;
          for (auto& v : hp) gv.push_back(grads.get(v));
          nn::adam_step(bundle.latent_gen.parameters(), gv, gen_adam);
          nn::ema_update(ema, bundle.latent_gen.parameters());
          ++ema_updates;
          gloss_sum += gloss;
        }

        closs_sum += last_closs;
        gap_sum += last_gap;
        if (cfg.divergence == MatchObjective::w1_gp && steps == 0) {
          nn::Tensor h_out = bundle.latent_gen.forward_values(gen_in);
          nn::Tensor fake = cfg.variant == Variant::clsdm
                                ? bundle.decoder.forward_values(h_out)
                                : h_out;
          gn_sum += critic_grad_norm_mean(critic, xb, zb, fake, gp_rng);
          ++gn_steps;
        }
        ++steps;
        ++global_step;
      }
      if (steps == 0)
        throw std::invalid_argument("train_latent_generator: n < batch");
      bundle.history.critic_loss.push_back(closs_sum / static_cast<double>(steps));
      bundle.history.generator_loss.push_back(gloss_sum / static_cast<double>(steps));
      bundle.history.critic_gap.push_back(gap_sum / static_cast<double>(steps));
      bundle.history.grad_norm_mean.push_back(
          gn_steps > 0 ? gn_sum / static_cast<double>(gn_steps) : 0.0);
    }
  } catch (const NonFiniteLoss& e) {
    bundle.outcome = TrainOutcome::diverged;
    bundle.diverged_at_step = e.step;
  } catch (const std::runtime_error&) {
    // Non-finite intermediates surface as graph errors; same outcome.
    bundle.outcome = TrainOutcome::diverged;
    bundle.diverged_at_step = global_step;
  }

  auto finalize_ema = [&]() {
    if (ema_updates == 0) {
      // Untrained: the shadow falls back to the raw weights.
      auto params = bundle.latent_gen.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) ema.shadow[i] = *params[i];
      return;
    }
    const double correction =
        1.0 - std::pow(cfg.ema_decay, static_cast<double>(ema_updates));
    for (auto& s : ema.shadow)
      for (auto& v : s.values) v /= correction;
  };
  finalize_ema();
  bundle.ema = std::move(ema);
  return bundle;
}

/// Draws count responses from the composite generator at a single predictor
/// point: D(H_ema(x, eta_k)) with eta_k iid standard normal.
inline nn::Tensor generate_conditional(const GeneratorBundle& bundle,
                                       const nn::Tensor& x, std::size_t count,
                                       nn::Rng& rng) {
  if (x.size() != bundle.scaler.offset.size())
    throw std::invalid_argument("generate_conditional: predictor dim mismatch");
  const std::size_t p = x.size(), d = bundle.noise_dim;
  nn::Tensor xs = bundle.scaler.apply(nn::Tensor::matrix(1, p, x.values));
  nn::Tensor in = nn::Tensor::zeros({count, p + d});
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t c = 0; c < p; ++c) in.at(r, c) = xs.values[c];
    for (std::size_t c = 0; c < d; ++c) in.at(r, p + c) = rng.normal();
  }
  const nn::Network h = bundle.ema_generator();
  return bundle.decoder.forward_values(h.forward_values(in));
}

/// Latent draws H_ema(x_i, eta_i), one per row of a scaled predictor batch.
inline nn::Tensor generate_latents_batch(const GeneratorBundle& bundle,
                                         const nn::Tensor& x_raw,
                                         nn::Rng& rng) {
  const std::size_t n = x_raw.rows(), p = x_raw.cols(), d = bundle.noise_dim;
  nn::Tensor xs = bundle.scaler.apply(x_raw);
  nn::Tensor in = nn::Tensor::zeros({n, p + d});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) in.at(r, c) = xs.at(r, c);
    for (std::size_t c = 0; c < d; ++c) in.at(r, p + c) = rng.normal();
  }
  return bundle.ema_generator().forward_values(in);
}

}  // namespace lsdm::train
