// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cstdint>

#include "dca/kernels.hpp"

namespace dca::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline std::int64_t hsum_epi64(__m256i v) {
  alignas(32) std::int64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; k + 4 <= n; k += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k));
    _mm256_storeu_pd(y + k, vy);
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

// Splits four nonnegative doubles below 2^31 into the ExactSum limb layout and
// adds them to the lane accumulators. The digit -> int64 conversion adds 2^52
// so the integer lands in the mantissa, then subtracts the bias bit pattern.
struct LimbLanes {
  __m256i l[4] = {_mm256_setzero_si256(), _mm256_setzero_si256(), _mm256_setzero_si256(),
                  _mm256_setzero_si256()};

  void add(__m256d x) {
    const __m256d magic = _mm256_set1_pd(0x1.0p52);
    const __m256i magic_bits = _mm256_castpd_si256(magic);
    const __m256d scale = _mm256_set1_pd(ExactSum::kLimbScale);

    __m256d digit = _mm256_floor_pd(x);
    __m256d r = _mm256_sub_pd(x, digit);
    l[0] = _mm256_add_epi64(
        l[0], _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(digit, magic)), magic_bits));
    for (int k = 1; k < 4; ++k) {
      r = _mm256_mul_pd(r, scale);
      digit = _mm256_floor_pd(r);
      r = _mm256_sub_pd(r, digit);
      l[k] = _mm256_add_epi64(
          l[k], _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(digit, magic)), magic_bits));
    }
  }

  void flush(ExactSum& sum) const {
    sum.add_limbs(hsum_epi64(l[0]), hsum_epi64(l[1]), hsum_epi64(l[2]), hsum_epi64(l[3]));
  }
};

void context_overlap_avx2(const double* a, const double* b, std::size_t n, ExactSum& min_sum,
                          ExactSum& max_sum) {
  LimbLanes mins;
  LimbLanes maxs;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d va = _mm256_loadu_pd(a + k);
    const __m256d vb = _mm256_loadu_pd(b + k);
    mins.add(_mm256_min_pd(va, vb));
    maxs.add(_mm256_max_pd(va, vb));
  }
  mins.flush(min_sum);
  maxs.flush(max_sum);
  for (; k < n; ++k) {
    min_sum.add(std::min(a[k], b[k]));
    max_sum.add(std::max(a[k], b[k]));
  }
}

}  // namespace

const KernelTable& avx2_table_impl() noexcept {
  static const KernelTable table{"avx2", squared_distance_avx2, dot_avx2, axpy_avx2,
                                 context_overlap_avx2};
  return table;
}

}  // namespace dca::kernels
