#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "lsdm/generator.hpp"
#include "lsdm/lipschitz.hpp"
#include "lsdm/ot.hpp"

namespace lsdm::train {

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / 1.41421356237309504880);
}

/// Wichura's AS241 rational approximation of the standard normal quantile.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
              0.24178072517745061177) * r + 1.27045825245236838258) * r +
            3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734) /
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
              0.0151986665636164571966) * r + 0.14810397642748007459) * r +
            0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              0.0012426609473880784386) * r + 0.026532189526576123093) * r +
            0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772) /
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
              1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
            0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -v : v;
}

struct Theorem1Result {
  double joint_w1 = 0.0;    // W1((X, Y), (X, G(X, eta)))
  double recon_term = 0.0;  // mean |Y - D(E(Y))|
  double matched_w1 = 0.0;  // W1((X, G(X, eta)), (X, D(E(Y))))
  bool inequality_holds = false;
};

/// Empirical risk decomposition of the composite generator on a test set,
/// one eta per test point. The inequality holds by the identity coupling
/// plus the triangle inequality, so any violation beyond 1e-9 is a solver
/// or wiring bug.
inline Theorem1Result theorem1_decomposition(const AutoencoderPair& ae,
                                             const GeneratorBundle& bundle,
                                             const nn::Tensor& x_test,
                                             const nn::Tensor& y_test,
                                             nn::Rng& rng) {
  const std::size_t n = x_test.rows(), p = x_test.cols(), q = y_test.cols();
  if (n == 0 || y_test.rows() != n)
    throw std::invalid_argument("theorem1: bad test set");

  const nn::Tensor latents = generate_latents_batch(bundle, x_test, rng);
  const nn::Tensor generated = bundle.decoder.forward_values(latents);
  const nn::Tensor recon = ae.reconstruct(y_test);

  auto joint = [&](const nn::Tensor& y) {
    nn::Tensor j = nn::Tensor::zeros({n, p + q});
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < p; ++c) j.at(r, c) = x_test.at(r, c);
      for (std::size_t c = 0; c < q; ++c) j.at(r, p + c) = y.at(r, c);
    }
    return ot::EmpiricalSample::from_matrix(j);
  };

  Theorem1Result r;
  r.joint_w1 = ot::w1_exact_equal(joint(y_test), joint(generated)).first;
  r.matched_w1 = ot::w1_exact_equal(joint(generated), joint(recon)).first;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < q; ++c) {
      const double d = y_test.at(i, c) - recon.at(i, c);
      d2 += d * d;
    }
    s += std::sqrt(d2);
  }
  r.recon_term = s / static_cast<double>(n);
  r.inequality_holds = r.joint_w1 <= r.recon_term + r.matched_w1 + 1e-9;
  return r;
}

struct Theorem2Result {
  double w1_latent = 0.0;
  double w1_decoded = 0.0;
  double lipschitz_bound = 0.0;  // certified K
  bool holds = false;
};

/// Pushforward contraction check: W1 of decoded samples against
/// (1 v K) times the latent W1, with K certified by the spectral bound.
inline Theorem2Result theorem2_check(const nn::Network& decoder,
                                     const ot::EmpiricalSample& latent_a,
                                     const ot::EmpiricalSample& latent_b) {
  if (latent_a.n != latent_b.n)
    throw std::invalid_argument("theorem2: sample counts differ");
  Theorem2Result r;
  r.lipschitz_bound = nn::lipschitz_upper_bound(decoder);
  r.w1_latent = ot::w1_exact_equal(latent_a, latent_b).first;
  auto decode = [&](const ot::EmpiricalSample& s) {
    nn::Tensor t = nn::Tensor::matrix(s.n, s.dim, s.pts);
    return ot::EmpiricalSample::from_matrix(decoder.forward_values(t));
  };
  r.w1_decoded = ot::w1_exact_equal(decode(latent_a), decode(latent_b)).first;
  const double k = std::max(1.0, r.lipschitz_bound);
  r.holds = r.w1_decoded <= k * r.w1_latent + 1e-9 * std::max(1.0, k * r.w1_latent);
  return r;
}

/// Largest distance from the decoded probe set to the response support;
/// empirical surrogate of sup_z dist(D(z), Y).
inline double range_proximity(
    const nn::Network& decoder, const ot::EmpiricalSample& latent_probes,
    const std::function<double(const double*, std::size_t)>& support_dist) {
  if (latent_probes.n == 0)
    throw std::invalid_argument("range_proximity: empty probe set");
  nn::Tensor probes =
      nn::Tensor::matrix(latent_probes.n, latent_probes.dim, latent_probes.pts);
  const nn::Tensor decoded = decoder.forward_values(probes);
  double worst = 0.0;
  for (std::size_t i = 0; i < decoded.rows(); ++i)
    worst = std::max(worst,
                     support_dist(&decoded.values[i * decoded.cols()],
                                  decoded.cols()));
  return worst;
}

/// Achievability baseline from the noise-outsourcing construction, m = 1:
/// bin the predictors, keep each cell's encoded latents sorted, and map
/// (x, eta) to the cell's empirical quantile at Phi(eta).
class QuantileOracle {
 public:
  /// Equal-width bins over the observed predictor range.
  static QuantileOracle fit(const nn::Tensor& x, const nn::Tensor& latents,
                            std::size_t bins) {
    if (bins < 1) throw std::invalid_argument("quantile oracle: bins >= 1");
    if (latents.cols() != 1)
      throw std::invalid_argument("quantile oracle: latent dim must be 1");
    const std::size_t n = x.rows();
    if (n == 0 || latents.rows() != n)
      throw std::invalid_argument("quantile oracle: bad inputs");
    QuantileOracle o;
    o.lo_ = x.values[0];
    o.hi_ = x.values[0];
    for (std::size_t i = 1; i < n; ++i) {
      o.lo_ = std::min(o.lo_, x.at(i, 0));
      o.hi_ = std::max(o.hi_, x.at(i, 0));
    }
    o.cells_.resize(bins);
    for (std::size_t i = 0; i < n; ++i)
      o.cells_[o.cell_of(x.at(i, 0))].push_back(latents.values[i]);
    for (std::size_t b = 0; b < bins; ++b) {
      if (o.cells_[b].empty())
        throw std::invalid_argument("quantile oracle: empty cell " +
                                    std::to_string(b));
      std::sort(o.cells_[b].begin(), o.cells_[b].end());
    }
    return o;
  }

  /// H*(x, eta): empirical quantile of cell(x) at Phi(eta).
  double sample(double x, double eta) const {
    const auto& cell = cells_[cell_of(x)];
    const double u = normal_cdf(eta);
    auto k = static_cast<std::size_t>(u * static_cast<double>(cell.size()));
    if (k >= cell.size()) k = cell.size() - 1;
    return cell[k];
  }

  std::size_t cell_of(double x) const {
    if (hi_ <= lo_) return 0;
    const double f = (x - lo_) / (hi_ - lo_);
    auto b = static_cast<long>(f * static_cast<double>(cells_.size()));
    if (b < 0) b = 0;
    if (b >= static_cast<long>(cells_.size()))
      b = static_cast<long>(cells_.size()) - 1;
    return static_cast<std::size_t>(b);
  }

  std::size_t bins() const { return cells_.size(); }
  const std::vector<double>& cell(std::size_t b) const { return cells_[b]; }

 private:
  double lo_ = 0.0, hi_ = 0.0;
  std::vector<std::vector<double>> cells_;
};

}  // namespace lsdm::train
