#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "lsdm/rng.hpp"
#include "lsdm/tensor.hpp"

namespace lsdm::data {

inline constexpr double kPi = 3.14159265358979323846;

/// Circle-manifold model: X ~ Unif([0, pi]), Y = (sin(X + e), cos(X + e))
/// with e ~ N(c2, sigma^2). The unpaired split draws from the shifted model
/// (support shift c1, conditional shift c2); paired and test splits are
/// always unshifted.
struct CircleModelConfig {
  std::size_t n = 250;        // paired size
  std::size_t N = 750;        // unpaired size
  double c1 = 0.0;            // support shift of the unpaired responses
  double c2 = 0.0;            // conditional shift (radians) of the unpaired noise
  double sigma = kPi / 10.0;  // noise standard deviation
  std::size_t test_size = 500;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1) throw std::invalid_argument("circle model: n must be >= 1");
    if (!(sigma > 0.0))
      throw std::invalid_argument("circle model: sigma must be > 0");
  }
};

struct PairedSet {
  nn::Tensor x;  // n x 1, values in [0, pi]
  nn::Tensor y;  // n x 2
};

struct UnpairedSet {
  nn::Tensor y;  // N x 2
};

struct TestSet {
  nn::Tensor x;
  nn::Tensor y;
};

struct CircleData {
  PairedSet paired;
  UnpairedSet unpaired;
  TestSet test;
  CircleModelConfig cfg;
};

namespace detail {

inline void draw_split(nn::Tensor& x, nn::Tensor& y, std::size_t count,
                       double c1, double c2, double sigma, nn::Rng rng) {
  x = nn::Tensor::zeros({count, 1});
  y = nn::Tensor::zeros({count, 2});
  for (std::size_t i = 0; i < count; ++i) {
    const double xi = kPi * rng.uniform();
    const double eps = c2 + sigma * rng.normal();
    x.values[i] = xi;
    y.at(i, 0) = std::sin(xi + eps) + c1;
    y.at(i, 1) = std::cos(xi + eps) + c1;
  }
}

}  // namespace detail

/// Draws the three splits from disjoint child streams, so resizing one
/// split never perturbs another.
inline CircleData sample_circle_model(const CircleModelConfig& cfg,
                                      const nn::Rng& rng) {
  cfg.validate();
  CircleData out;
  out.cfg = cfg;
  detail::draw_split(out.paired.x, out.paired.y, cfg.n, 0.0, 0.0, cfg.sigma,
                     rng.child("paired"));
  nn::Tensor unpaired_x;
  detail::draw_split(unpaired_x, out.unpaired.y, cfg.N, cfg.c1, cfg.c2,
                     cfg.sigma, rng.child("unpaired"));
  detail::draw_split(out.test.x, out.test.y, cfg.test_size, 0.0, 0.0,
                     cfg.sigma, rng.child("test"));
  return out;
}

/// Exact distance from a point to the circle of radius 1 centred at (c1, c1).
inline double dist_to_circle_support(double y0, double y1, double c1) {
  const double r = std::hypot(y0 - c1, y1 - c1);
  return std::abs(r - 1.0);
}

/// Direct draws from the known conditional density at a given x; evaluation
/// baseline. sigma = 0 collapses to the noiseless point (sin x, cos x).
inline nn::Tensor oracle_conditional_sample(double x, std::size_t count,
                                            nn::Rng& rng,
                                            double sigma = kPi / 10.0) {
  if (x < 0.0 || x > kPi)
    throw std::invalid_argument("oracle sample: x must lie in [0, pi]");
  nn::Tensor out = nn::Tensor::zeros({count, 2});
  for (std::size_t i = 0; i < count; ++i) {
    const double eps = sigma == 0.0 ? 0.0 : sigma * rng.normal();
    out.at(i, 0) = std::sin(x + eps);
    out.at(i, 1) = std::cos(x + eps);
  }
  return out;
}

/// Conditional Gaussian latent toy: discrete x in {0..k-1}, z | x = i drawn
/// N(means[i], stds[i]^2). Plumbing for the diffusion analytic tests.
struct GaussianLatentData {
  nn::Tensor x;  // n x 1
  nn::Tensor z;  // n x 1
};

inline GaussianLatentData sample_gaussian_latents(
    const std::vector<double>& means, const std::vector<double>& stds,
    std::size_t count, nn::Rng& rng) {
  if (means.empty() || means.size() != stds.size())
    throw std::invalid_argument("gaussian latents: bad component spec");
  GaussianLatentData d;
  d.x = nn::Tensor::zeros({count, 1});
  d.z = nn::Tensor::zeros({count, 1});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = rng.index(means.size());
    d.x.values[i] = static_cast<double>(k);
    d.z.values[i] = means[k] + stds[k] * rng.normal();
  }
  return d;
}

inline void export_csv(const CircleData& d, std::ostream& os) {
  os << "split,x,y1,y2\n";
  char buf[160];
  auto emit = [&](const char* split, double x, double y0, double y1) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n", split, x, y0, y1);
    os << buf;
  };
  for (std::size_t i = 0; i < d.paired.x.rows(); ++i)
    emit("paired", d.paired.x.values[i], d.paired.y.at(i, 0), d.paired.y.at(i, 1));
  for (std::size_t i = 0; i < d.unpaired.y.rows(); ++i)
    emit("unpaired", std::nan(""), d.unpaired.y.at(i, 0), d.unpaired.y.at(i, 1));
  for (std::size_t i = 0; i < d.test.x.rows(); ++i)
    emit("test", d.test.x.values[i], d.test.y.at(i, 0), d.test.y.at(i, 1));
}

}  // namespace lsdm::data
