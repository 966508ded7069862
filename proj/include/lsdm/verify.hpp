#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsdm/autoencoder.hpp"
#include "lsdm/data.hpp"
#include "lsdm/diffusion.hpp"
#include "lsdm/generator.hpp"
#include "lsdm/lipschitz.hpp"
#include "lsdm/ot.hpp"
#include "lsdm/theorems.hpp"

namespace lsdm::verify {

struct CheckResult {
  std::string name;
  std::string group;
  std::size_t passed = 0;
  std::size_t total = 0;
  double worst_slack = 0.0;  // most adverse margin seen; sign convention per check
  bool ok() const { return passed == total; }
};

struct Report {
  std::vector<CheckResult> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.ok()) return false;
    return true;
  }
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["all_pass"] = all_pass();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
      j["checks"].push_back({{"name", c.name},
                             {"group", c.group},
                             {"passed", c.passed},
                             {"total", c.total},
                             {"worst_slack", c.worst_slack}});
    return j;
  }
};

namespace detail {

/// Brute-force matching oracle: minimum mean cost over all permutations.
inline double brute_force_w1(const ot::EmpiricalSample& a,
                             const ot::EmpiricalSample& b) {
  std::vector<std::size_t> perm(a.n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < a.n; ++i) c += a.distance(i, b, perm[i]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.n);
}

inline ot::EmpiricalSample random_cloud(std::size_t n, std::size_t dim,
                                        nn::Rng& rng) {
  std::vector<double> pts(n * dim);
  for (auto& v : pts) v = rng.uniform(-1.0, 1.0);
  return ot::EmpiricalSample(n, dim, std::move(pts));
}

inline ot::Histogram random_histogram(std::size_t bins, nn::Rng& rng,
                                      double floor = 0.01) {
  ot::Histogram h;
  h.probs.resize(bins);
  double s = 0.0;
  for (auto& p : h.probs) {
    p = floor + rng.uniform();
    s += p;
  }
  for (auto& p : h.probs) p /= s;
  // Exact renormalization so the 1e-12 sum contract holds.
  double s2 = 0.0;
  for (double p : h.probs) s2 += p;
  h.probs.back() += 1.0 - s2;
  return h;
}

inline nn::Network random_mlp(nn::Rng& rng, std::size_t in_dim,
                              std::size_t out_dim, bool piecewise_only) {
  const std::size_t layers = 1 + rng.index(2);  // 1 or 2 hidden layers
  std::vector<std::size_t> dims{in_dim};
  for (std::size_t l = 0; l < layers; ++l) dims.push_back(2 + rng.index(5));
  dims.push_back(out_dim);
  nn::MlpSpec spec;
  spec.dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (l + 2 == dims.size()) {
      spec.acts.push_back(nn::LayerAct::linear());
    } else if (piecewise_only) {
      spec.acts.push_back(rng.index(2) == 0 ? nn::LayerAct::relu()
                                            : nn::LayerAct::leaky(0.2));
    } else {
      switch (rng.index(4)) {
        case 0: spec.acts.push_back(nn::LayerAct::relu()); break;
        case 1: spec.acts.push_back(nn::LayerAct::leaky(0.2)); break;
        case 2: spec.acts.push_back(nn::LayerAct::tanh()); break;
        default: spec.acts.push_back(nn::LayerAct::sigmoid()); break;
      }
    }
  }
  return nn::Network::build(spec, rng);
}

/// Batch kept away from activation kinks so central differences are valid.
inline nn::Tensor kink_free_batch(const nn::Network& net, std::size_t rows,
                                  nn::Rng& rng, double margin = 1e-4) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    nn::Tensor x = nn::Tensor::zeros({rows, net.input_dim()});
    for (auto& v : x.values) v = rng.uniform(-1.5, 1.5);
    bool clean = true;
    nn::Tensor h = x;
    for (std::size_t l = 0; l < net.depth() && clean; ++l) {
      nn::Tensor a = nn::Tensor::zeros({h.rows(), net.weights()[l].rows()});
      nn::detail::mm_nt(h, net.weights()[l], a);
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
          a.at(r, c) += net.biases()[l].values[c];
      const auto kind = net.activations()[l].kind;
      if (kind == nn::Activation::relu || kind == nn::Activation::leaky_relu)
        for (double v : a.values)
          if (std::abs(v) < margin) {
            clean = false;
            break;
          }
      nn::Tensor act = a;
      if (kind == nn::Activation::relu)
        for (auto& v : act.values) v = v > 0 ? v : 0.0;
      else if (kind == nn::Activation::leaky_relu)
        for (auto& v : act.values)
          v = v > 0 ? v : net.activations()[l].slope * v;
      else if (kind == nn::Activation::tanh)
        for (auto& v : act.values) v = std::tanh(v);
      else if (kind == nn::Activation::sigmoid)
        for (auto& v : act.values) v = 1.0 / (1.0 + std::exp(-v));
      h = std::move(act);
    }
    if (clean) return x;
  }
  throw std::runtime_error("could not sample a kink-free batch");
}

/// Mean squared error against fixed targets, evaluated without the graph.
inline double mse_value(const nn::Network& net, const nn::Tensor& x,
                        const nn::Tensor& targets) {
  const nn::Tensor out = net.forward_values(x);
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out.values[i] - targets.values[i];
    s += d * d;
  }
  return s / static_cast<double>(out.rows());
}

/// Analytic per-sample input gradient of a scalar-output affine network
/// with relu / leaky_relu / linear activations; independent of the graph.
inline nn::Tensor analytic_input_gradient(const nn::Network& net,
                                          const nn::Tensor& x) {
  const std::size_t rows = x.rows();
  std::vector<nn::Tensor> preacts;
  nn::Tensor h = x;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    nn::Tensor a = nn::Tensor::zeros({h.rows(), net.weights()[l].rows()});
    nn::detail::mm_nt(h, net.weights()[l], a);
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (std::size_t c = 0; c < a.cols(); ++c)
        a.at(r, c) += net.biases()[l].values[c];
    preacts.push_back(a);
    const auto act = net.activations()[l];
    if (act.kind == nn::Activation::relu)
      for (auto& v : a.values) v = v > 0 ? v : 0.0;
    else if (act.kind == nn::Activation::leaky_relu)
      for (auto& v : a.values) v = v > 0 ? v : act.slope * v;
    else if (act.kind != nn::Activation::linear)
      throw std::invalid_argument("analytic gradient: unsupported activation");
    h = std::move(a);
  }
  // u starts as d out / d preact_L = 1 (scalar output), walk layers back.
  nn::Tensor grad = nn::Tensor::zeros({rows, net.input_dim()});
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> u{1.0};
    for (std::size_t l = net.depth(); l-- > 0;) {
      const auto act = net.activations()[l];
      for (std::size_t c = 0; c < u.size(); ++c) {
        const double pa = preacts[l].at(r, c);
        double slope = 1.0;
        if (act.kind == nn::Activation::relu) slope = pa > 0 ? 1.0 : 0.0;
        if (act.kind == nn::Activation::leaky_relu)
          slope = pa > 0 ? 1.0 : act.slope;
        u[c] *= slope;
      }
      const nn::Tensor& w = net.weights()[l];
      std::vector<double> prev(w.cols(), 0.0);
      for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j)
          prev[j] += u[i] * w.at(i, j);
      u = std::move(prev);
    }
    for (std::size_t j = 0; j < u.size(); ++j) grad.at(r, j) = u[j];
  }
  return grad;
}

}  // namespace detail

// ---- individual checks ----

inline CheckResult check_assignment_oracle(std::uint64_t seed = 11) {
  CheckResult c{"ot_assignment_oracle_equivalence", "ot"};
  nn::Rng rng(seed);
  for (std::size_t n = 2; n <= 7; ++n) {
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t dim = 1 + rng.index(3);
      auto a = detail::random_cloud(n, dim, rng);
      auto b = detail::random_cloud(n, dim, rng);
      const double solver = ot::w1_exact_equal(a, b).first;
      const double oracle = detail::brute_force_w1(a, b);
      const double slack = std::abs(solver - oracle);
      c.worst_slack = std::max(c.worst_slack, slack);
      ++c.total;
      if (slack <= 1e-9) ++c.passed;
    }
  }
  return c;
}

inline CheckResult check_metric_axioms(std::uint64_t seed = 12) {
  CheckResult c{"ot_metric_axioms", "ot"};
  nn::Rng rng(seed);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.index(9), dim = 1 + rng.index(3);
    auto a = detail::random_cloud(n, dim, rng);
    auto b = detail::random_cloud(n, dim, rng);
    auto d = detail::random_cloud(n, dim, rng);
    const double ab = ot::w1_exact_equal(a, b).first;
    const double ba = ot::w1_exact_equal(b, a).first;
    const double ad = ot::w1_exact_equal(a, d).first;
    const double db = ot::w1_exact_equal(d, b).first;
    const double self = ot::w1_exact_equal(a, a).first;
    const double sym = std::abs(ab - ba);
    const double tri = ab - (ad + db);
    c.worst_slack = std::max({c.worst_slack, sym, tri, self});
    ++c.total;
    if (sym <= 1e-12 && tri <= 1e-9 && self <= 1e-12) ++c.passed;
  }
  return c;
}

inline CheckResult check_pinsker(std::uint64_t seed = 13) {
  CheckResult c{"pinsker_tv_vs_kl", "divergence"};
  nn::Rng rng(seed);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t bins = 2 + rng.index(31);
    auto p = detail::random_histogram(bins, rng);
    auto q = detail::random_histogram(bins, rng);
    const double tv = ot::f_divergence(p, q, ot::Divergence::tv);
    const double kl = ot::f_divergence(p, q, ot::Divergence::kl);
    const double slack = tv - std::sqrt(0.5 * kl);
    c.worst_slack = std::max(c.worst_slack, slack);
    ++c.total;
    if (slack <= 1e-12) ++c.passed;
  }
  return c;
}

inline CheckResult check_kl_le_chi2(std::uint64_t seed = 14) {
  CheckResult c{"kl_le_chi2", "divergence"};
  nn::Rng rng(seed);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t bins = 2 + rng.index(31);
    auto p = detail::random_histogram(bins, rng);
    auto q = detail::random_histogram(bins, rng);
    const double kl = ot::f_divergence(p, q, ot::Divergence::kl);
    const double chi2 = ot::f_divergence(p, q, ot::Divergence::chi2);
    const double slack = kl - chi2;
    c.worst_slack = std::max(c.worst_slack, slack);
    ++c.total;
    if (slack <= 1e-12) ++c.passed;
  }
  return c;
}

inline CheckResult check_js_bounded(std::uint64_t seed = 15) {
  CheckResult c{"js_le_ln2", "divergence"};
  nn::Rng rng(seed);
  const double ln2 = std::log(2.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t bins = 2 + rng.index(31);
    auto p = detail::random_histogram(bins, rng, 0.0);
    auto q = detail::random_histogram(bins, rng, 0.0);
    const double js = ot::f_divergence(p, q, ot::Divergence::js);
    const double slack = js - ln2;
    c.worst_slack = std::max(c.worst_slack, slack);
    ++c.total;
    if (slack <= 1e-12) ++c.passed;
  }
  return c;
}

inline CheckResult check_prop3_sweep(std::uint64_t seed = 16,
                                     std::size_t pairs = 1000) {
  CheckResult c{"prop3_w1_bound_sweep", "prop3"};
  nn::Rng rng(seed);
  const std::size_t grid = 32;
  std::vector<double> support(grid);
  for (std::size_t i = 0; i < grid; ++i)
    support[i] = static_cast<double>(i) / static_cast<double>(grid - 1);
  const ot::Divergence kinds[] = {ot::Divergence::kl, ot::Divergence::js,
                                  ot::Divergence::chi2, ot::Divergence::tv,
                                  ot::Divergence::hellinger2};
  c.worst_slack = -1e9;
  for (std::size_t rep = 0; rep < pairs; ++rep) {
    auto hp = detail::random_histogram(grid, rng);
    auto hq = detail::random_histogram(grid, rng);
    ot::DiscreteDist1D p(support, hp.probs), q(support, hq.probs);
    for (auto kind : kinds) {
      const auto r = ot::prop3_bound_check(p, q, kind);
      c.worst_slack = std::max(c.worst_slack, r.w1 - r.bound);
      ++c.total;
      if (r.holds) ++c.passed;
    }
  }
  return c;
}

inline CheckResult check_theorem1_random(std::uint64_t seed = 17,
                                         std::size_t models = 50) {
  CheckResult c{"theorem1_random_models", "theorems"};
  nn::Rng rng(seed);
  c.worst_slack = -1e9;
  for (std::size_t rep = 0; rep < models; ++rep) {
    const std::size_t n = 6 + rng.index(10);
    train::AutoencoderPair ae;
    ae.latent_dim = 1;
    ae.encoder = detail::random_mlp(rng, 2, 1, false);
    ae.decoder = detail::random_mlp(rng, 1, 2, false);
    train::GeneratorBundle bundle;
    bundle.decoder = ae.decoder;
    bundle.encoder = ae.encoder;
    bundle.latent_dim = 1;
    bundle.noise_dim = 2;
    bundle.latent_gen = detail::random_mlp(rng, 3, 1, false);
    bundle.ema = nn::EmaState(0.5, bundle.latent_gen.parameters());
    nn::Tensor x = nn::Tensor::zeros({n, 1});
    nn::Tensor y = nn::Tensor::zeros({n, 2});
    for (auto& v : x.values) v = rng.uniform(0.0, 3.0);
    for (auto& v : y.values) v = rng.uniform(-1.0, 1.0);
    bundle.scaler = train::PredictorScaler::fit(x);
    auto r = train::theorem1_decomposition(ae, bundle, x, y, rng);
    c.worst_slack =
        std::max(c.worst_slack, r.joint_w1 - r.recon_term - r.matched_w1);
    ++c.total;
    if (r.inequality_holds) ++c.passed;
  }
  return c;
}

inline CheckResult check_theorem2_random(std::uint64_t seed = 18,
                                         std::size_t models = 100) {
  CheckResult c{"theorem2_random_decoders", "theorems"};
  nn::Rng rng(seed);
  c.worst_slack = -1e9;
  for (std::size_t rep = 0; rep < models; ++rep) {
    const std::size_t m = 1 + rng.index(2), q = m + rng.index(3);
    nn::Network dec = detail::random_mlp(rng, m, q, false);
    const std::size_t n = 4 + rng.index(12);
    auto a = detail::random_cloud(n, m, rng);
    auto b = detail::random_cloud(n, m, rng);
    auto r = train::theorem2_check(dec, a, b);
    const double rhs = std::max(1.0, r.lipschitz_bound) * r.w1_latent;
    c.worst_slack = std::max(c.worst_slack, r.w1_decoded - rhs);
    ++c.total;
    if (r.holds) ++c.passed;
  }
  return c;
}

inline CheckResult check_gradients(std::uint64_t seed = 19,
                                   std::size_t models = 100) {
  CheckResult c{"reverse_mode_vs_finite_differences", "gradients"};
  nn::Rng rng(seed);
  for (std::size_t rep = 0; rep < models; ++rep) {
    nn::Network net = detail::random_mlp(rng, 1 + rng.index(3),
                                         1 + rng.index(2), false);
    const std::size_t rows = 2 + rng.index(3);
    nn::Tensor x = detail::kink_free_batch(net, rows, rng);
    nn::Tensor targets = nn::Tensor::zeros({rows, net.output_dim()});
    for (auto& v : targets.values) v = rng.uniform(-1.0, 1.0);

    nn::Graph g;
    auto bound = net.bind(g);
    nn::Value out = net.forward(g, bound, g.input(x));
    nn::Value loss =
        g.mean_all(g.rowsum(g.square(g.sub(out, g.constant(targets)))));
    auto grads = g.backward(loss);

    double worst = 0.0;
    const double h = 1e-5;
    auto params = net.parameters();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      const nn::Tensor ad = grads.get(bound[pi]);
      for (std::size_t k = 0; k < params[pi]->size(); ++k) {
        const double keep = params[pi]->values[k];
        params[pi]->values[k] = keep + h;
        const double up = detail::mse_value(net, x, targets);
        params[pi]->values[k] = keep - h;
        const double dn = detail::mse_value(net, x, targets);
        params[pi]->values[k] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double err = std::abs(ad.values[k] - fd);
        const double rel =
            std::abs(ad.values[k]) < 1e-8 ? err : err / std::abs(ad.values[k]);
        worst = std::max(worst, rel);
      }
    }
    c.worst_slack = std::max(c.worst_slack, worst);
    ++c.total;
    if (worst <= 1e-5) ++c.passed;
  }
  return c;
}

inline CheckResult check_double_backprop(std::uint64_t seed = 20,
                                         std::size_t models = 20) {
  CheckResult c{"gradient_penalty_double_backprop", "gradients"};
  nn::Rng rng(seed);
  const double lambda = 10.0;
  for (std::size_t rep = 0; rep < models; ++rep) {
    nn::Network critic = detail::random_mlp(rng, 2 + rng.index(3), 1, true);
    const std::size_t rows = 3 + rng.index(3);
    nn::Tensor pts = detail::kink_free_batch(critic, rows, rng);

    auto penalty_value = [&]() {
      const nn::Tensor grad = detail::analytic_input_gradient(critic, pts);
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        double n2 = 0.0;
        for (std::size_t j = 0; j < grad.cols(); ++j)
          n2 += grad.at(r, j) * grad.at(r, j);
        const double gap = std::sqrt(n2) - 1.0;
        s += gap * gap;
      }
      return lambda * s / static_cast<double>(rows);
    };

    nn::Graph g;
    auto bound = critic.bind(g);
    nn::Value v = g.input(pts);
    nn::Value score = critic.forward(g, bound, v);
    nn::Value grad_node = g.input_gradient_node(score, v);
    nn::Value pen = g.scalar_mul(
        g.mean_all(g.square(g.scalar_add(g.rownorm(grad_node), -1.0))), lambda);

    // Emitted gradient nodes must agree with the analytic input gradient.
    const nn::Tensor analytic = detail::analytic_input_gradient(critic, pts);
    double emit_err = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i)
      emit_err = std::max(emit_err, std::abs(analytic.values[i] -
                                             grad_node.tensor().values[i]));

    auto grads = g.backward(pen);
    double worst = emit_err;
    const double h = 1e-5;
    auto params = critic.parameters();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      const nn::Tensor ad = grads.get(bound[pi]);
      for (std::size_t k = 0; k < params[pi]->size(); ++k) {
        const double keep = params[pi]->values[k];
        params[pi]->values[k] = keep + h;
        const double up = penalty_value();
        params[pi]->values[k] = keep - h;
        const double dn = penalty_value();
        params[pi]->values[k] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double err = std::abs(ad.values[k] - fd);
        const double rel =
            std::abs(ad.values[k]) < 1e-6 ? err : err / std::abs(ad.values[k]);
        worst = std::max(worst, rel);
      }
    }
    c.worst_slack = std::max(c.worst_slack, worst);
    ++c.total;
    if (worst <= 1e-4) ++c.passed;
  }
  return c;
}

inline CheckResult check_lipschitz_domination(std::uint64_t seed = 21) {
  CheckResult c{"lipschitz_bound_dominates", "theorems"};
  nn::Rng rng(seed);
  c.worst_slack = -1e9;
  for (int net_rep = 0; net_rep < 10; ++net_rep) {
    nn::Network net =
        detail::random_mlp(rng, 1 + rng.index(3), 1 + rng.index(3), false);
    const double k = nn::lipschitz_upper_bound(net);
    for (int rep = 0; rep < 100; ++rep) {
      nn::Tensor u = nn::Tensor::zeros({1, net.input_dim()});
      nn::Tensor v = nn::Tensor::zeros({1, net.input_dim()});
      for (auto& x : u.values) x = rng.uniform(-2.0, 2.0);
      for (auto& x : v.values) x = rng.uniform(-2.0, 2.0);
      const nn::Tensor fu = net.forward_values(u), fv = net.forward_values(v);
      double dout = 0.0, din = 0.0;
      for (std::size_t i = 0; i < fu.size(); ++i) {
        const double d = fu.values[i] - fv.values[i];
        dout += d * d;
      }
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u.values[i] - v.values[i];
        din += d * d;
      }
      const double slack = std::sqrt(dout) - k * std::sqrt(din);
      c.worst_slack = std::max(c.worst_slack, slack);
      ++c.total;
      if (slack <= 1e-9) ++c.passed;
    }
  }
  return c;
}

inline CheckResult check_ou_conservation() {
  CheckResult c{"ou_mean_scale_variance_conservation", "diffusion"};
  for (int i = 0; i < 1000; ++i) {
    const double t = 50.0 * static_cast<double>(i) / 999.0;
    const auto ou = diffusion::ou_marginal(t);
    const double slack =
        std::abs(ou.mean_scale * ou.mean_scale + ou.variance - 1.0);
    c.worst_slack = std::max(c.worst_slack, slack);
    ++c.total;
    if (slack <= 1e-12) ++c.passed;
  }
  return c;
}

inline CheckResult check_quantile_achievability(std::uint64_t seed = 22) {
  CheckResult c{"quantile_oracle_achievability", "quantile"};
  const std::size_t n = 1000, bins = 20;
  data::CircleModelConfig dcfg;
  dcfg.n = n;
  dcfg.N = 0;
  dcfg.test_size = 1;
  nn::Rng rng(seed);
  auto ds = data::sample_circle_model(dcfg, rng.child("data"));

  train::StepOneConfig s1;
  s1.epochs = 40;
  auto [ae, hist] =
      train::train_autoencoder(ds.paired.y, 1, s1, rng.child("step1"));

  const nn::Tensor latents = ae.encode(ds.paired.y);
  auto oracle = train::QuantileOracle::fit(ds.paired.x, latents, bins);
  nn::Rng eta = rng.child("eta");
  std::vector<double> gen(n);
  for (std::size_t i = 0; i < n; ++i)
    gen[i] = oracle.sample(ds.paired.x.values[i], eta.normal());
  auto sample_gen = ot::EmpiricalSample(n, 1, std::move(gen));
  auto sample_enc = ot::EmpiricalSample(n, 1, latents.values);
  const double w1 = ot::w1_exact_equal(sample_gen, sample_enc).first;
  const double budget = 4.0 / std::sqrt(static_cast<double>(n));
  c.worst_slack = w1 - budget;
  c.total = 1;
  c.passed = w1 <= budget ? 1 : 0;
  return c;
}

// ---- suite ----

inline Report run_verification_suite(const std::string& scope = "all") {
  auto in_scope = [&](const char* group) {
    return scope == "all" || scope == group;
  };
  Report rep;
  if (in_scope("ot")) {
    rep.checks.push_back(check_assignment_oracle());
    rep.checks.push_back(check_metric_axioms());
  }
  if (in_scope("divergence")) {
    rep.checks.push_back(check_pinsker());
    rep.checks.push_back(check_kl_le_chi2());
    rep.checks.push_back(check_js_bounded());
  }
  if (in_scope("prop3")) rep.checks.push_back(check_prop3_sweep());
  if (in_scope("theorems")) {
    rep.checks.push_back(check_theorem1_random());
    rep.checks.push_back(check_theorem2_random());
    rep.checks.push_back(check_lipschitz_domination());
  }
  if (in_scope("gradients")) {
    rep.checks.push_back(check_gradients());
    rep.checks.push_back(check_double_backprop());
  }
  if (in_scope("diffusion")) rep.checks.push_back(check_ou_conservation());
  if (in_scope("quantile"))
    rep.checks.push_back(check_quantile_achievability());
  return rep;
}

}  // namespace lsdm::verify
