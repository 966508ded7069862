#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lsdm/assignment.hpp"
#include "lsdm/tensor.hpp"

namespace lsdm::ot {

/// Uniform-weight point cloud, n points in R^dim.
struct EmpiricalSample {
  std::size_t n = 0, dim = 0;
  std::vector<double> pts;  // row-major

  EmpiricalSample() = default;
  EmpiricalSample(std::size_t n_, std::size_t dim_, std::vector<double> p)
      : n(n_), dim(dim_), pts(std::move(p)) {
    if (n == 0) throw std::invalid_argument("empirical sample: empty");
    if (pts.size() != n * dim)
      throw std::invalid_argument("empirical sample: size mismatch");
    for (double v : pts)
      if (!std::isfinite(v))
        throw std::invalid_argument("empirical sample: non-finite coordinate");
  }

  static EmpiricalSample from_matrix(const nn::Tensor& m) {
    return EmpiricalSample(m.rows(), m.cols(), m.values);
  }

  const double* row(std::size_t i) const { return &pts[i * dim]; }

  double distance(std::size_t i, const EmpiricalSample& other,
                  std::size_t j) const {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = row(i)[c] - other.row(j)[c];
      s += d * d;
    }
    return std::sqrt(s);
  }
};

struct Matching {
  std::vector<std::size_t> perm;
  double cost = 0.0;
};

/// Exact W1 between equal-count uniform empiricals: minimum over
/// permutations of the mean Euclidean matching cost. Dimension 1 reduces to
/// sorted pairing; otherwise the dense Hungarian solver runs in O(n^3).
inline std::pair<double, Matching> w1_exact_equal(const EmpiricalSample& a,
                                                  const EmpiricalSample& b) {
  if (a.n != b.n)
    throw std::invalid_argument("w1_exact_equal: sample counts differ");
  if (a.dim != b.dim)
    throw std::invalid_argument("w1_exact_equal: dimensions differ");
  const std::size_t n = a.n;
  Matching m;
  if (a.dim == 1 && !testing::corrupt_assignment()) {
    std::vector<std::size_t> ia(n), ib(n);
    std::iota(ia.begin(), ia.end(), 0);
    std::iota(ib.begin(), ib.end(), 0);
    std::sort(ia.begin(), ia.end(),
              [&](std::size_t x, std::size_t y) { return a.pts[x] < a.pts[y]; });
    std::sort(ib.begin(), ib.end(),
              [&](std::size_t x, std::size_t y) { return b.pts[x] < b.pts[y]; });
    m.perm.resize(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      m.perm[ia[k]] = ib[k];
      total += std::abs(a.pts[ia[k]] - b.pts[ib[k]]);
    }
    m.cost = total / static_cast<double>(n);
    return {m.cost, m};
  }
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = a.distance(i, b, j);
  m.perm = solve_assignment(cost, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + m.perm[i]];
  m.cost = total / static_cast<double>(n);
  return {m.cost, m};
}

/// Weighted discrete distribution on the real line.
struct DiscreteDist1D {
  std::vector<double> support;  // sorted, distinct
  std::vector<double> probs;    // nonnegative, sums to 1 within 1e-12

  DiscreteDist1D() = default;
  DiscreteDist1D(std::vector<double> s, std::vector<double> p)
      : support(std::move(s)), probs(std::move(p)) {
    validate();
  }

  void validate() const {
    if (support.empty() || support.size() != probs.size())
      throw std::invalid_argument("discrete dist: size mismatch");
    for (std::size_t i = 1; i < support.size(); ++i)
      if (!(support[i] > support[i - 1]))
        throw std::invalid_argument("discrete dist: support not sorted distinct");
    double s = 0.0;
    for (double p : probs) {
      if (p < 0.0) throw std::invalid_argument("discrete dist: negative mass");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("discrete dist: probabilities sum to " +
                                  std::to_string(s));
  }
};

/// Exact 1-D W1 as the integral of |F_p - F_q| over the merged support.
inline double w1_1d_weighted(const DiscreteDist1D& p, const DiscreteDist1D& q) {
  p.validate();
  q.validate();
  std::vector<double> grid;
  grid.reserve(p.support.size() + q.support.size());
  std::merge(p.support.begin(), p.support.end(), q.support.begin(),
             q.support.end(), std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double w1 = 0.0, fp = 0.0, fq = 0.0;
  std::size_t ip = 0, iq = 0;
  for (std::size_t k = 0; k + 1 <= grid.size(); ++k) {
    while (ip < p.support.size() && p.support[ip] <= grid[k]) fp += p.probs[ip++];
    while (iq < q.support.size() && q.support[iq] <= grid[k]) fq += q.probs[iq++];
    if (k + 1 < grid.size()) w1 += std::abs(fp - fq) * (grid[k + 1] - grid[k]);
  }
  return w1;
}

/// Probability vector on a shared, implicit support.
struct Histogram {
  std::vector<double> probs;

  void validate() const {
    if (probs.empty()) throw std::invalid_argument("histogram: empty");
    double s = 0.0;
    for (double p : probs) {
      if (p < 0.0) throw std::invalid_argument("histogram: negative mass");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("histogram: probabilities sum to " +
                                  std::to_string(s));
  }
};

enum class Divergence { kl, js, chi2, tv, hellinger2 };

inline const char* divergence_name(Divergence d) {
  switch (d) {
    case Divergence::kl: return "kl";
    case Divergence::js: return "js";
    case Divergence::chi2: return "chi2";
    case Divergence::tv: return "tv";
    case Divergence::hellinger2: return "hellinger2";
  }
  return "?";
}

namespace detail {

inline double kl_terms(const std::vector<double>& p,
                       const std::vector<double>& q, bool strict) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;  // 0 log 0 = 0
    if (q[i] == 0.0) {
      if (strict)
        throw std::invalid_argument(
            "f_divergence: absolute continuity violated (q_i = 0, p_i > 0)");
      continue;
    }
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

}  // namespace detail

/// f-divergences on a common finite support, in nats. KL and chi-squared
/// require p absolutely continuous with respect to q.
inline double f_divergence(const Histogram& p, const Histogram& q,
                           Divergence kind) {
  p.validate();
  q.validate();
  if (p.probs.size() != q.probs.size())
    throw std::invalid_argument("f_divergence: support mismatch");
  const std::size_t n = p.probs.size();
  switch (kind) {
    case Divergence::kl:
      return detail::kl_terms(p.probs, q.probs, true);
    case Divergence::chi2: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = p.probs[i] - q.probs[i];
        if (q.probs[i] == 0.0) {
          if (p.probs[i] != 0.0)
            throw std::invalid_argument(
                "f_divergence: absolute continuity violated (q_i = 0, p_i > 0)");
          continue;
        }
        s += diff * diff / q.probs[i];
      }
      return s;
    }
    case Divergence::js: {
      std::vector<double> m(n);
      for (std::size_t i = 0; i < n; ++i)
        m[i] = 0.5 * (p.probs[i] + q.probs[i]);
      return 0.5 * detail::kl_terms(p.probs, m, false) +
             0.5 * detail::kl_terms(q.probs, m, false);
    }
    case Divergence::tv: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += std::abs(p.probs[i] - q.probs[i]);
      return 0.5 * s;
    }
    case Divergence::hellinger2: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = std::sqrt(p.probs[i]) - std::sqrt(q.probs[i]);
        s += d * d;
      }
      return s;
    }
  }
  throw std::invalid_argument("f_divergence: unknown kind");
}

struct Prop3Result {
  double w1 = 0.0;
  double divergence = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// Checks W1(p, q) <= 2 diam(Omega) max{D_f, sqrt(D_f / 2)} on the merged
/// bounded support, with exact constituents.
inline Prop3Result prop3_bound_check(const DiscreteDist1D& p,
                                     const DiscreteDist1D& q,
                                     Divergence kind) {
  p.validate();
  q.validate();
  std::vector<double> grid;
  std::merge(p.support.begin(), p.support.end(), q.support.begin(),
             q.support.end(), std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  auto align = [&](const DiscreteDist1D& d) {
    Histogram h;
    h.probs.assign(grid.size(), 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (k < d.support.size() && d.support[k] == grid[i])
        h.probs[i] = d.probs[k++];
    return h;
  };

  Prop3Result r;
  r.w1 = w1_1d_weighted(p, q);
  r.divergence = f_divergence(align(p), align(q), kind);
  const double diam = grid.back() - grid.front();
  r.bound =
      2.0 * diam * std::max(r.divergence, std::sqrt(0.5 * r.divergence));
  r.holds = r.w1 <= r.bound + 1e-12;
  return r;
}

}  // namespace lsdm::ot
