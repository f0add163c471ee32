#include <algorithm>

#include "dca/kernels.hpp"

namespace dca::kernels {
namespace {

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void context_overlap_scalar(const double* a, const double* b, std::size_t n, ExactSum& min_sum,
                            ExactSum& max_sum) {
  for (std::size_t k = 0; k < n; ++k) {
    min_sum.add(std::min(a[k], b[k]));
    max_sum.add(std::max(a[k], b[k]));
  }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{"scalar", squared_distance_scalar, dot_scalar, axpy_scalar,
                                 context_overlap_scalar};
  return table;
}

}  // namespace dca::kernels
