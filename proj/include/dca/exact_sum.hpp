#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace dca {

/// Order-independent summation.
///
/// Each addend is truncated toward zero onto a fixed grid of 2^-96 and split
/// into four 32-bit limbs held in 64-bit integer lanes. Integer addition is associative,
/// so the result depends only on the multiset of addends, never on their
/// order. This makes batch reductions bit-identical under row permutation and
/// lets scalar and SIMD kernels agree exactly.
///
/// Addends must satisfy |x| < 2^31; at most 2^31 addends per accumulator.
/// Truncation error is below 2^-96 per addend.
class ExactSum {
 public:
  static constexpr double kLimbScale = 4294967296.0;  // 2^32
  static constexpr double kMaxMagnitude = 2147483648.0;  // 2^31

  void add(double x) noexcept {
    // split the magnitude so every fractional step is exact, then apply the sign
    const bool negative = x < 0.0;
    double r = negative ? -x : x;
    std::int64_t digits[4];
    const double whole = std::floor(r);
    r -= whole;
    digits[0] = static_cast<std::int64_t>(whole);
    for (int k = 1; k < 4; ++k) {
      r *= kLimbScale;
      const double digit = std::floor(r);
      digits[k] = static_cast<std::int64_t>(digit);
      r -= digit;
    }
    for (int k = 0; k < 4; ++k) limbs_[k] += negative ? -digits[k] : digits[k];
  }

  /// Adds pre-split limbs (as produced by a vectorised kernel).
  void add_limbs(std::int64_t l0, std::int64_t l1, std::int64_t l2, std::int64_t l3) noexcept {
    limbs_[0] += l0;
    limbs_[1] += l1;
    limbs_[2] += l2;
    limbs_[3] += l3;
  }

  ExactSum& operator+=(const ExactSum& other) noexcept {
    for (int k = 0; k < 4; ++k) limbs_[k] += other.limbs_[k];
    return *this;
  }

  /// The accumulated grid value rounded once to nearest, ties to even.
  double value() const noexcept {
    std::int64_t l[4] = {limbs_[0], limbs_[1], limbs_[2], limbs_[3]};
    for (int k = 3; k > 0; --k) {
      // floor division by 2^32 keeps each lower limb in [0, 2^32)
      const std::int64_t carry = l[k] >> 32;
      l[k] -= carry * (std::int64_t{1} << 32);
      l[k - 1] += carry;
    }
    // each term is exact in double; the partials sum below rounds only once
    const double inv = 1.0 / kLimbScale;
    const double terms[4] = {static_cast<double>(l[3]) * inv * inv * inv,
                             static_cast<double>(l[2]) * inv * inv, static_cast<double>(l[1]) * inv,
                             static_cast<double>(l[0])};
    return rounded_sum(terms);
  }

 private:
  // Shewchuk's nonoverlapping partials with a final half-way correction, as
  // in Python's math.fsum.
  static double rounded_sum(const double (&terms)[4]) noexcept {
    double partials[4];
    int n = 0;
    for (double x : terms) {
      int i = 0;
      for (int j = 0; j < n; ++j) {
        double y = partials[j];
        if (std::abs(x) < std::abs(y)) std::swap(x, y);
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) partials[i++] = lo;
        x = hi;
      }
      partials[i] = x;
      n = i + 1;
    }
    if (n == 0) return 0.0;
    double hi = partials[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

  std::int64_t limbs_[4] = {0, 0, 0, 0};
};

}  // namespace dca
