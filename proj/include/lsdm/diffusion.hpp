#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsdm/graph.hpp"
#include "lsdm/network.hpp"
#include "lsdm/optim.hpp"
#include "lsdm/ot.hpp"
#include "lsdm/rng.hpp"

namespace lsdm::diffusion {

struct OuMarginal {
  double mean_scale;  // e^{-t/2}
  double variance;    // 1 - e^{-t}
};

/// Transition moments of dZ = -1/2 Z dt + dW started from a unit point
/// mass; mean_scale^2 + variance = 1 for all t.
inline OuMarginal ou_marginal(double t) {
  if (t < 0.0) throw std::invalid_argument("ou_marginal: t must be >= 0");
  const double e = std::exp(-t);
  return {std::sqrt(e), 1.0 - e};
}

struct DiffusionConfig {
  double horizon = 5.0;     // T
  std::size_t steps = 200;  // Euler-Maruyama steps, delta = T / steps
  double t_min = 1e-3;      // training time cutoff above the t -> 0 singularity
  std::size_t embed_frequencies = 8;
  std::size_t epochs = 200;
  std::size_t batch = 64;
  nn::AdamConfig adam{1e-3, 0.9, 0.99};  // short second-moment memory: the
                                         // small-t loss tail spikes
  double grad_clip = 10.0;               // global-norm clip, same reason
  std::vector<std::size_t> milestones;
  std::vector<std::size_t> hidden{64, 64};
  std::uint64_t seed = 0;

  void validate() const {
    if (!(horizon > 0.0))
      throw std::invalid_argument("diffusion: horizon must be > 0");
    if (steps < 1) throw std::invalid_argument("diffusion: steps must be >= 1");
    if (!(t_min > 0.0 && t_min < horizon))
      throw std::invalid_argument("diffusion: t_min must lie in (0, horizon)");
    adam.validate();
  }

  double delta() const { return horizon / static_cast<double>(steps); }
};

/// Conditional score network s(z, x, t) -> R^m. Time enters through a
/// sinusoidal embedding of log t. Internally the MLP is preconditioned the
/// standard way: with per-dimension data scale s, noise scale sigma_t and
/// mean scale mu_t, the denoised latent is
///   z0-hat = c_skip z + c_out F(c_in z, x, t),
///   c_in = 1 / sqrt(mu^2 s^2 + sigma^2), c_skip = mu s^2 (c_in)^2,
///   c_out = sigma s c_in,
/// which keeps F's input and regression target at unit scale across the
/// whole time range. The score is the exact Gaussian-posterior rescaling
/// (mu z0-hat - z) / sigma^2 and the dsm loss below is still the plain
/// score regression.
struct ScoreNet {
  nn::Network net;
  std::size_t latent_dim = 0;
  std::size_t cond_dim = 0;
  std::size_t embed_frequencies = 8;
  std::vector<double> data_std;  // per-latent-dim scale s, from training data

  static ScoreNet build(std::size_t latent_dim, std::size_t cond_dim,
                        const DiffusionConfig& cfg, nn::Rng& rng) {
    ScoreNet s;
    s.latent_dim = latent_dim;
    s.cond_dim = cond_dim;
    s.embed_frequencies = cfg.embed_frequencies;
    s.data_std.assign(latent_dim, 1.0);
    std::vector<std::size_t> dims{latent_dim + cond_dim +
                                  2 * cfg.embed_frequencies};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(latent_dim);
    s.net = nn::Network::build(
        nn::MlpSpec::make(dims, nn::LayerAct::leaky(0.2), nn::LayerAct::linear()),
        rng);
    return s;
  }

  void set_data_std_from(const nn::Tensor& z0) {
    data_std.assign(latent_dim, 1.0);
    for (std::size_t c = 0; c < latent_dim; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < z0.rows(); ++r) mean += z0.at(r, c);
      mean /= static_cast<double>(z0.rows());
      double var = 0.0;
      for (std::size_t r = 0; r < z0.rows(); ++r) {
        const double d = z0.at(r, c) - mean;
        var += d * d;
      }
      var /= static_cast<double>(z0.rows());
      data_std[c] = std::max(1e-2, std::sqrt(var));
    }
  }

  struct Precond {
    double c_in, c_skip, c_out;
  };

  Precond precond(double t, std::size_t dim) const {
    const OuMarginal ou = ou_marginal(t);
    const double s2 = data_std[dim] * data_std[dim];
    const double v = ou.mean_scale * ou.mean_scale * s2 + ou.variance;
    Precond p;
    p.c_in = 1.0 / std::sqrt(v);
    p.c_skip = ou.mean_scale * s2 / v;
    p.c_out = std::sqrt(ou.variance) * data_std[dim] * p.c_in;
    return p;
  }

  /// Frequencies 2^{k-3} (0.125 .. 16 at the default width): the lowest is
  /// monotone over the training range of log t, the highest resolves the
  /// small-t regime where the noise scale moves fastest.
  void embed_time(double t, double* out) const {
    const double lt = std::log(t);
    for (std::size_t k = 0; k < embed_frequencies; ++k) {
      const double a = lt * std::pow(2.0, static_cast<double>(k) - 3.0);
      out[2 * k] = std::sin(a);
      out[2 * k + 1] = std::cos(a);
    }
  }

  /// Assembled input rows [c_in z | x | embed(t_i)] for per-row times.
  nn::Tensor assemble(const nn::Tensor& z, const nn::Tensor& x,
                      const std::vector<double>& t) const {
    const std::size_t b = z.rows(), m = latent_dim, p = cond_dim;
    const std::size_t e = 2 * embed_frequencies;
    nn::Tensor in = nn::Tensor::zeros({b, m + p + e});
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t c = 0; c < m; ++c)
        in.at(r, c) = precond(t[r], c).c_in * z.at(r, c);
      for (std::size_t c = 0; c < p; ++c) in.at(r, m + c) = x.at(r, c);
      embed_time(t[r], &in.values[r * (m + p + e) + m + p]);
    }
    return in;
  }

  /// The score itself: (e^{-t/2} z0-hat - z) / (1 - e^{-t}) per row.
  nn::Tensor forward_values(const nn::Tensor& z, const nn::Tensor& x,
                            const std::vector<double>& t) const {
    nn::Tensor out = net.forward_values(assemble(z, x, t));
    for (std::size_t r = 0; r < out.rows(); ++r) {
      const OuMarginal ou = ou_marginal(t[r]);
      for (std::size_t c = 0; c < out.cols(); ++c) {
        const Precond pc = precond(t[r], c);
        const double z0_hat = pc.c_skip * z.at(r, c) + pc.c_out * out.at(r, c);
        out.at(r, c) = (ou.mean_scale * z0_hat - z.at(r, c)) / ou.variance;
      }
    }
    return out;
  }
};

/// Batched score evaluation hook: (z, x, t) -> score, rows aligned with z.
using ScoreFn = std::function<nn::Tensor(const nn::Tensor& z,
                                         const nn::Tensor& x, double t)>;

inline ScoreFn score_fn_of(const ScoreNet& s) {
  return [&s](const nn::Tensor& z, const nn::Tensor& x, double t) {
    return s.forward_values(z, x, std::vector<double>(z.rows(), t));
  };
}

/// Denoising score matching loss on a batch: with t ~ U((t_min, T]) and
/// xi ~ N(0, I_m), noise z0 to z_t = z0 e^{-t/2} + sqrt(1 - e^{-t}) xi and
/// regress the score on -xi / sqrt(1 - e^{-t}). fixed_t > 0 pins the time
/// for every row (used by oracle tests).
inline nn::Value dsm_loss(nn::Graph& g, const ScoreNet& score,
                          const std::vector<nn::Value>& bound,
                          const nn::Tensor& z0, const nn::Tensor& x,
                          const DiffusionConfig& cfg, nn::Rng& rng,
                          double fixed_t = 0.0) {
  const std::size_t b = z0.rows(), m = z0.cols();
  std::vector<double> t(b);
  for (auto& v : t)
    v = fixed_t > 0.0
            ? fixed_t
            : cfg.t_min + (cfg.horizon - cfg.t_min) * rng.uniform_open();
  nn::Tensor zt = nn::Tensor::zeros({b, m});
  nn::Tensor target = nn::Tensor::zeros({b, m});
  nn::Tensor f_scale = nn::Tensor::zeros({b, m});  // mu c_out / sigma^2
  nn::Tensor offset = nn::Tensor::zeros({b, m});   // (mu c_skip - 1) z / sigma^2
  for (std::size_t r = 0; r < b; ++r) {
    const OuMarginal ou = ou_marginal(t[r]);
    const double sd = std::sqrt(ou.variance);
    for (std::size_t c = 0; c < m; ++c) {
      const double xi = rng.normal();
      zt.at(r, c) = z0.at(r, c) * ou.mean_scale + sd * xi;
      target.at(r, c) = xi / sd;
      const auto pc = score.precond(t[r], c);
      f_scale.at(r, c) = ou.mean_scale * pc.c_out / ou.variance;
      offset.at(r, c) =
          (ou.mean_scale * pc.c_skip - 1.0) * zt.at(r, c) / ou.variance;
    }
  }
  nn::Value in = g.input(score.assemble(zt, x, t));
  nn::Value f_out = score.net.forward(g, bound, in);
  nn::Value s = g.add(g.mul(f_out, g.constant(f_scale)), g.constant(offset));
  nn::Value resid = g.add(s, g.constant(target));
  return g.mean_all(g.rowsum(g.square(resid)));
}

struct ScoreTrainResult {
  ScoreNet score;
  std::vector<double> loss_history;  // per-epoch mean dsm loss
};

/// Monte-Carlo value of the denoising loss for an arbitrary score function:
/// mean over draws of |s(z_t, x, t) + xi / sqrt(1 - e^{-t})|^2. Shares the
/// formula with the graph-mode dsm_loss; used for analytic controls.
inline double dsm_loss_mc(const ScoreFn& score, const nn::Tensor& z0,
                          const nn::Tensor& x, const DiffusionConfig& cfg,
                          nn::Rng& rng, double fixed_t = 0.0) {
  const std::size_t n = z0.rows(), m = z0.cols();
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double t = fixed_t > 0.0 ? fixed_t
                                   : cfg.t_min + (cfg.horizon - cfg.t_min) *
                                                     rng.uniform_open();
    const OuMarginal ou = ou_marginal(t);
    const double sd = std::sqrt(ou.variance);
    nn::Tensor zt = nn::Tensor::zeros({1, m});
    std::vector<double> target(m);
    for (std::size_t c = 0; c < m; ++c) {
      const double xi = rng.normal();
      zt.at(0, c) = z0.at(r, c) * ou.mean_scale + sd * xi;
      target[c] = xi / sd;
    }
    nn::Tensor xr = nn::Tensor::matrix(
        1, x.cols(),
        std::vector<double>(x.values.begin() + r * x.cols(),
                            x.values.begin() + (r + 1) * x.cols()));
    const nn::Tensor s = score(zt, xr, t);
    for (std::size_t c = 0; c < m; ++c) {
      const double d = s.values[c] + target[c];
      acc += d * d;
    }
  }
  return acc / static_cast<double>(n);
}

inline ScoreTrainResult train_score_net(const nn::Tensor& x,
                                        const nn::Tensor& z0,
                                        const DiffusionConfig& cfg,
                                        const nn::Rng& rng) {
  cfg.validate();
  const std::size_t n = z0.rows();
  if (n == 0 || x.rows() != n)
    throw std::invalid_argument("train_score_net: bad latents");
  const std::size_t batch = std::min<std::size_t>(cfg.batch, n);

  nn::Rng init = rng.child("init_score");
  nn::Rng noise = rng.child("dsm_noise");
  nn::Rng shuffle_rng = rng.child("shuffle");

  ScoreTrainResult res;
  res.score = ScoreNet::build(z0.cols(), x.cols(), cfg, init);
  res.score.set_data_std_from(z0);
  nn::AdamState adam(cfg.adam);
  const auto milestones = cfg.milestones.empty()
                              ? nn::default_milestones(cfg.epochs)
                              : cfg.milestones;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.cfg.alpha = nn::lr_schedule_value(cfg.adam.alpha, epoch, milestones);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start + batch <= n; start += batch) {
      nn::Tensor zb = nn::Tensor::zeros({batch, z0.cols()});
      nn::Tensor xb = nn::Tensor::zeros({batch, x.cols()});
      for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t c = 0; c < z0.cols(); ++c)
          zb.at(i, c) = z0.at(order[start + i], c);
        for (std::size_t c = 0; c < x.cols(); ++c)
          xb.at(i, c) = x.at(order[start + i], c);
      }
      nn::Graph g;
      auto bound = res.score.net.bind(g);
      nn::Value loss = dsm_loss(g, res.score, bound, zb, xb, cfg, noise);
      if (!std::isfinite(loss.scalar()))
        throw std::runtime_error("train_score_net: non-finite loss at epoch " +
                                 std::to_string(epoch));
      auto grads = g.backward(loss);
      std::vector<nn::Tensor> gv;
      for (auto& v : bound) gv.push_back(grads.get(v));
      if (cfg.grad_clip > 0.0) {
        double norm2 = 0.0;
        for (const auto& t : gv)
          for (double v : t.values) norm2 += v * v;
        const double norm = std::sqrt(norm2);
        if (norm > cfg.grad_clip) {
          const double f = cfg.grad_clip / norm;
          for (auto& t : gv)
            for (double& v : t.values) v *= f;
        }
      }
      nn::adam_step(res.score.net.parameters(), gv, adam);
      loss_sum += loss.scalar();
      ++steps;
    }
    if (steps == 0)
      throw std::invalid_argument("train_score_net: batch larger than data");
    res.loss_history.push_back(loss_sum / static_cast<double>(steps));
  }
  return res;
}

/// One Euler-Maruyama update f_t(z, x, eta): z + (z/2 + s(z, x, T - t)) dt
/// + eta sqrt(dt). Exposed so tests can compose steps explicitly.
inline nn::Tensor em_step(const ScoreFn& score, const nn::Tensor& z,
                          const nn::Tensor& x, double t,
                          const DiffusionConfig& cfg, const nn::Tensor& eta) {
  const nn::Tensor s = score(z, x, cfg.horizon - t);
  if (!s.same_shape(z))
    throw std::invalid_argument("em_step: score shape mismatch");
  const double dt = cfg.delta(), sq = std::sqrt(dt);
  nn::Tensor out = z;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out.values[i] += (0.5 * z.values[i] + s.values[i]) * dt + eta.values[i] * sq;
    if (!std::isfinite(out.values[i]))
      throw std::runtime_error("em_step: non-finite trajectory at t = " +
                               std::to_string(t));
  }
  return out;
}

/// Reverse-process sampler: z_0 = eta_0 ~ N(0, I_m), then N steps of
/// em_step at times t_n = n delta with fresh Gaussian noise per step.
/// Returns count latent samples at the single predictor point x.
inline nn::Tensor em_sample(const ScoreFn& score, const nn::Tensor& x_row,
                            std::size_t latent_dim, const DiffusionConfig& cfg,
                            nn::Rng& rng, std::size_t count) {
  cfg.validate();
  nn::Tensor x = nn::Tensor::zeros({count, x_row.size()});
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t c = 0; c < x_row.size(); ++c)
      x.at(r, c) = x_row.values[c];
  nn::Tensor z = nn::Tensor::zeros({count, latent_dim});
  for (auto& v : z.values) v = rng.normal();
  const double dt = cfg.delta();
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    nn::Tensor eta = nn::Tensor::zeros({count, latent_dim});
    for (auto& v : eta.values) v = rng.normal();
    try {
      z = em_step(score, z, x, static_cast<double>(step) * dt, cfg, eta);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " (step " +
                               std::to_string(step) + ")");
    }
  }
  return z;
}

struct Prop2Report {
  double l_sm_estimate = 0.0;
  double bound = 0.0;  // (T L_SM)^{1/4} + e^{-T/2}
  double measured_w1 = 0.0;
  bool analytic_control = false;
};

/// Monte-Carlo report relating the score-matching objective to the measured
/// joint latent W1. With an analytic control score, L_SM is estimated as the
/// dsm gap against the control on shared noise draws; without one the raw
/// dsm value stands in as an upper proxy. The bound carries unknown absolute
/// constants, so only qualitative comparisons are asserted downstream.
inline Prop2Report prop2_report(const ScoreNet& score, const nn::Tensor& x,
                                const nn::Tensor& z0,
                                const DiffusionConfig& cfg, nn::Rng rng,
                                const ScoreFn* analytic_control = nullptr) {
  const std::size_t n = z0.rows(), m = z0.cols();
  Prop2Report rep;
  rep.analytic_control = analytic_control != nullptr;

  // Monte-Carlo dsm estimates on shared (t, xi) draws: both evaluations
  // start from a copy of the same stream.
  const nn::Rng mc = rng.child("prop2_mc");
  const std::size_t rounds = 32;
  ScoreFn model_fn = score_fn_of(score);
  double dsm_model = 0.0, dsm_control = 0.0;
  {
    nn::Rng draws = mc;
    for (std::size_t round = 0; round < rounds; ++round)
      dsm_model += dsm_loss_mc(model_fn, z0, x, cfg, draws);
    dsm_model /= static_cast<double>(rounds);
  }
  if (analytic_control) {
    nn::Rng draws = mc;
    for (std::size_t round = 0; round < rounds; ++round)
      dsm_control += dsm_loss_mc(*analytic_control, z0, x, cfg, draws);
    dsm_control /= static_cast<double>(rounds);
  }
  rep.l_sm_estimate = analytic_control
                          ? std::max(0.0, dsm_model - dsm_control)
                          : dsm_model;
  rep.bound = std::pow(cfg.horizon * rep.l_sm_estimate, 0.25) +
              std::exp(-cfg.horizon / 2.0);

  // Measured joint latent W1: one generated latent per paired predictor.
  nn::Rng sampler = rng.child("prop2_sample");
  ScoreFn fn = score_fn_of(score);
  nn::Tensor gen = nn::Tensor::zeros({n, m});
  for (std::size_t r = 0; r < n; ++r) {
    nn::Tensor xr = nn::Tensor::matrix(1, x.cols(), std::vector<double>(
                                                        x.values.begin() + r * x.cols(),
                                                        x.values.begin() + (r + 1) * x.cols()));
    nn::Tensor zr = em_sample(fn, xr, m, cfg, sampler, 1);
    for (std::size_t c = 0; c < m; ++c) gen.at(r, c) = zr.values[c];
  }
  const std::size_t p = x.cols();
  auto joint = [&](const nn::Tensor& z) {
    nn::Tensor j = nn::Tensor::zeros({n, p + m});
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < p; ++c) j.at(r, c) = x.at(r, c);
      for (std::size_t c = 0; c < m; ++c) j.at(r, p + c) = z.at(r, c);
    }
    return ot::EmpiricalSample::from_matrix(j);
  };
  rep.measured_w1 = ot::w1_exact_equal(joint(gen), joint(z0)).first;
  return rep;
}

}  // namespace lsdm::diffusion
