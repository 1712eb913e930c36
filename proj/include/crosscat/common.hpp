#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace crosscat {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

// Prices are indexed 0..n; index 0 is the no-purchase option (normally 0).
using PriceVector = std::vector<double>;

// Tolerance for validating probability inputs (rows, arrival vectors, ...).
inline constexpr double kInputTol = 1e-12;
// Tolerance expected of computed probability outputs.
inline constexpr double kOutputTol = 1e-9;
// Upper bound on attraction weights; estimation clips to this value.
inline constexpr double kWeightCap = 1e4;

// Raised when a model fails validation or a structurally unsupported model
// is passed to an algorithm (cycles, wrong kernel type, singular chains).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an iterative method exhausts its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Membership mask over options 0..n for an assortment of products in 1..n.
// Index 0 (no-purchase) is always available.
inline std::vector<char> offer_mask(int n, const std::vector<int>& assortment) {
  std::vector<char> mask(static_cast<std::size_t>(n) + 1, 0);
  mask[0] = 1;
  for (int p : assortment) {
    if (p < 1 || p > n)
      throw std::invalid_argument("assortment contains product " + std::to_string(p) +
                                  " outside 1.." + std::to_string(n));
    if (mask[static_cast<std::size_t>(p)])
      throw std::invalid_argument("assortment lists product " + std::to_string(p) + " twice");
    mask[static_cast<std::size_t>(p)] = 1;
  }
  return mask;
}

inline double vec_sum(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Solves A x = b by Gaussian elimination with partial pivoting.
// A and b are consumed. Throws ModelError if the system is singular.
Vec solve_dense(Mat A, Vec b);

}  // namespace crosscat
