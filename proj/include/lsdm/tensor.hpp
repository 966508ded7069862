#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace lsdm::nn {

/// Dense row-major array of 64-bit floats. Rank 0 holds a single scalar,
/// rank 1 a vector, rank 2 a (rows x cols) matrix; higher ranks are unused.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> v)
      : shape(std::move(s)), values(std::move(v)) {
    if (element_count(shape) != values.size())
      throw std::invalid_argument("tensor: shape does not match value count");
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::size_t n = element_count(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }

  static Tensor full(std::vector<std::size_t> s, double v) {
    std::size_t n = element_count(s);
    return Tensor(std::move(s), std::vector<double>(n, v));
  }

  static Tensor scalar(double v) { return Tensor({}, {v}); }

  static Tensor row_vector(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
  }

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }

  std::size_t rows() const {
    if (rank() != 2) throw std::invalid_argument("tensor: rows() needs rank 2");
    return shape[0];
  }
  std::size_t cols() const {
    if (rank() != 2) throw std::invalid_argument("tensor: cols() needs rank 2");
    return shape[1];
  }

  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return values[r * cols() + c];
  }

  double scalar_value() const {
    if (values.size() != 1)
      throw std::invalid_argument("tensor: not a scalar");
    return values[0];
  }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

namespace detail {

// C(r x m) = A(r x k) * B(k x m)
inline void mm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t r = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < r; ++i) {
    double* ci = &c.values[i * m];
    const double* ai = &a.values[i * k];
    for (std::size_t t = 0; t < k; ++t) {
      const double av = ai[t];
      const double* bt = &b.values[t * m];
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bt[j];
    }
  }
}

// C(r x m) = A(r x k) * B(m x k)^T; rows of both operands stream contiguously.
inline void mm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t r = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < r; ++i) {
    const double* ai = &a.values[i * k];
    double* ci = &c.values[i * m];
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = &b.values[j * k];
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += ai[t] * bj[t];
      ci[j] += acc;
    }
  }
}

// C(r x m) = A(k x r)^T * B(k x m)
inline void mm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t k = a.rows(), r = a.cols(), m = b.cols();
  for (std::size_t t = 0; t < k; ++t) {
    const double* at = &a.values[t * r];
    const double* bt = &b.values[t * m];
    for (std::size_t i = 0; i < r; ++i) {
      const double av = at[i];
      double* ci = &c.values[i * m];
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bt[j];
    }
  }
}

}  // namespace detail
}  // namespace lsdm::nn
