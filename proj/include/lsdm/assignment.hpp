#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lsdm::ot {

namespace testing {
/// Test hook: when set, solve_assignment returns the identity permutation
/// instead of the optimal one. Exists so verification checks can be shown
/// to catch a broken solver; never enable outside tests.
inline bool& corrupt_assignment() {
  static bool flag = false;
  return flag;
}
}  // namespace testing

/// Exact minimum-cost assignment on a dense n x n cost matrix (row-major),
/// Hungarian algorithm with potentials, O(n^3). Returns perm with
/// perm[i] = column assigned to row i.
inline std::vector<std::size_t> solve_assignment(const std::vector<double>& cost,
                                                 std::size_t n) {
  if (n == 0) throw std::invalid_argument("assignment: empty instance");
  if (cost.size() != n * n)
    throw std::invalid_argument("assignment: cost matrix is not n x n");
  if (testing::corrupt_assignment()) {
    std::vector<std::size_t> id(n);
    for (std::size_t i = 0; i < n; ++i) id[i] = i;
    return id;
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> perm(n);
  for (std::size_t j = 1; j <= n; ++j) perm[p[j] - 1] = j - 1;
  return perm;
}

}  // namespace lsdm::ot
