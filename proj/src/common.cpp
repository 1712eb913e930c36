#include "crosscat/common.hpp"

#include <cmath>
#include <cstdlib>
#include <utility>

namespace crosscat {

Vec solve_dense(Mat A, Vec b) {
  const std::size_t n = A.size();
  if (n == 0) return {};
  for (const auto& row : A)
    if (row.size() != n) throw std::invalid_argument("solve_dense: matrix is not square");
  if (b.size() != n) throw std::invalid_argument("solve_dense: rhs size mismatch");

  // Scale-aware singularity threshold.
  double scale = 0.0;
  for (const auto& row : A)
    for (double x : row) scale = std::max(scale, std::abs(x));
  const double tiny = (scale > 0 ? scale : 1.0) * 1e-14;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < tiny)
      throw ModelError("solve_dense: singular system (no absorption path?)");
    if (piv != col) {
      std::swap(A[piv], A[col]);
      std::swap(b[piv], b[col]);
    }
    const double d = A[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r][col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  Vec x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= A[i][c] * x[c];
    x[i] = s / A[i][i];
  }
  return x;
}

}  // namespace crosscat
