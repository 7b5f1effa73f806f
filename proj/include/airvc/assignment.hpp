#pragma once

// Optimal one-to-one assignment (Hungarian method, shortest augmenting path
// with potentials). Works on rectangular matrices; every row is matched when
// rows <= cols, otherwise every column is.

#include <cstddef>
#include <limits>
#include <vector>

namespace airvc {

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Returns, for each row, the assigned column or -1. The total cost of the
/// matching is minimal among all matchings of size min(rows, cols).
/// Deterministic: rows are inserted in index order and the first column
/// attaining a minimum slack is always taken.
inline std::vector<int> solve_assignment(const CostMatrix& cost) {
  const std::size_t R = cost.rows(), C = cost.cols();
  std::vector<int> row_to_col(R, -1);
  if (R == 0 || C == 0) return row_to_col;

  const bool transposed = R > C;
  const std::size_t n = transposed ? C : R;  // rows of the working problem
  const std::size_t m = transposed ? R : C;
  auto a = [&](std::size_t i, std::size_t j) { return transposed ? cost(j, i) : cost(i, j); };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual root column.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
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

  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const std::size_t i = p[j] - 1, col = j - 1;
    if (transposed)
      row_to_col[col] = static_cast<int>(i);
    else
      row_to_col[i] = static_cast<int>(col);
  }
  return row_to_col;
}

inline double assignment_cost(const CostMatrix& cost, const std::vector<int>& row_to_col) {
  double total = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r)
    if (row_to_col[r] >= 0) total += cost(r, static_cast<std::size_t>(row_to_col[r]));
  return total;
}

}  // namespace airvc
