#include "mmcrl/assignment.hpp"

#include <limits>
#include <stdexcept>

namespace mmcrl {

std::vector<int> max_assignment(const Tensor& score) {
  const std::size_t n = score.rows();
  if (score.cols() != n)
    throw std::invalid_argument("max_assignment: matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Minimize the negated cost with the standard shortest-augmenting-path
  // formulation (1-based with a virtual column 0).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = static_cast<int>(i);
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = -1;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -score(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = static_cast<int>(j);
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> col_of_row(n, -1);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) col_of_row[p[j] - 1] = static_cast<int>(j) - 1;
  return col_of_row;
}

}  // namespace mmcrl
