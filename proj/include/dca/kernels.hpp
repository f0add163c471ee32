#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "dca/exact_sum.hpp"

namespace dca::kernels {

/// Inner loops of the metric and embedder code. Every entry has a scalar
/// reference implementation; the AVX2 variants must agree with it (exactly
/// for context_overlap, to rounding for the floating-point reductions).
struct KernelTable {
  std::string_view name;
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // Accumulates sum_k min(a[k], b[k]) and sum_k max(a[k], b[k]). Inputs are
  // nonnegative and below 2^31.
  void (*context_overlap)(const double* a, const double* b, std::size_t n, ExactSum& min_sum,
                          ExactSum& max_sum);
};

const KernelTable& scalar_table() noexcept;

/// AVX2+FMA table, or nullptr when the build or the CPU lacks support.
const KernelTable* avx2_table() noexcept;

/// Table used by the library. Chosen once per process: AVX2 when available,
/// unless the environment variable DCA_SIMD is set to "scalar".
const KernelTable& active() noexcept;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void context_overlap(std::span<const double> a, std::span<const double> b,
                            ExactSum& min_sum, ExactSum& max_sum) {
  active().context_overlap(a.data(), b.data(), a.size(), min_sum, max_sum);
}

}  // namespace dca::kernels
