#include <algorithm>
#include <mpfr.h>

#include <cmath>
#include <vector>

#include "dca/exact_sum.hpp"
#include "dca/kernels.hpp"
#include "dca/rng.hpp"
#include "doctest.h"
#include "support.hpp"

using dca::ExactSum;
using dca::Rng;
namespace kernels = dca::kernels;

namespace {

std::vector<double> normals(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<double> unit_interval(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = std::exp(-10.0 * rng.uniform());
  return v;
}

std::vector<const kernels::KernelTable*> all_tables() {
  std::vector<const kernels::KernelTable*> tables{&kernels::scalar_table()};
  if (kernels::avx2_table() != nullptr) tables.push_back(kernels::avx2_table());
  return tables;
}

}  // namespace

TEST_CASE("active kernel table is one of the known variants") {
  const auto name = kernels::active().name;
  CHECK((name == "scalar" || name == "avx2"));
  MESSAGE("active kernels: " << name);
}

TEST_CASE("SIMD kernels agree with the scalar reference") {
  const auto* simd = kernels::avx2_table();
  if (simd == nullptr) {
    MESSAGE("AVX2 not available; equivalence test skipped");
    return;
  }
  const auto& ref = kernels::scalar_table();
  Rng rng(11);
  for (std::size_t n = 0; n <= 67; ++n) {
    CAPTURE(n);
    const auto a = normals(n, rng);
    const auto b = normals(n, rng);

    const double sd_ref = ref.squared_distance(a.data(), b.data(), n);
    const double sd_simd = simd->squared_distance(a.data(), b.data(), n);
    CHECK(std::abs(sd_ref - sd_simd) <= 1e-13 * std::max(1.0, sd_ref));

    const double dot_ref = ref.dot(a.data(), b.data(), n);
    const double dot_simd = simd->dot(a.data(), b.data(), n);
    double mag = 0.0;
    for (std::size_t k = 0; k < n; ++k) mag += std::abs(a[k] * b[k]);
    CHECK(std::abs(dot_ref - dot_simd) <= 1e-14 * std::max(1.0, mag));

    auto y_ref = normals(n, rng);
    auto y_simd = y_ref;
    ref.axpy(0.37, a.data(), y_ref.data(), n);
    simd->axpy(0.37, a.data(), y_simd.data(), n);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(y_ref[k] - y_simd[k]) <= 1e-15 * 4.0);

    // context sums are integer-exact, so the variants must match bit for bit
    const auto u = unit_interval(n, rng);
    const auto w = unit_interval(n, rng);
    ExactSum lo_ref, hi_ref, lo_simd, hi_simd;
    ref.context_overlap(u.data(), w.data(), n, lo_ref, hi_ref);
    simd->context_overlap(u.data(), w.data(), n, lo_simd, hi_simd);
    CHECK(lo_ref.value() == lo_simd.value());
    CHECK(hi_ref.value() == hi_simd.value());
  }
}

TEST_CASE("context_overlap sums min and max") {
  const std::vector<double> a{1.0, 0.25, 0.5};
  const std::vector<double> b{0.5, 0.75, 0.5};
  for (const auto* t : all_tables()) {
    ExactSum lo, hi;
    t->context_overlap(a.data(), b.data(), a.size(), lo, hi);
    CHECK(lo.value() == 1.25);
    CHECK(hi.value() == 2.25);
  }
}

TEST_CASE("ExactSum is independent of addend order") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    std::vector<double> xs(n);
    for (double& x : xs) x = rng.normal() * std::exp(8.0 * rng.normal());
    for (double& x : xs) x = std::clamp(x, -1e9, 1e9);
    ExactSum forward_sum;
    for (double x : xs) forward_sum.add(x);
    const auto perm = testing::random_permutation(n, rng);
    ExactSum shuffled_sum;
    for (std::size_t i : perm) shuffled_sum.add(xs[i]);
    CHECK(forward_sum.value() == shuffled_sum.value());

    long double reference = 0.0L;
    double magnitude = 0.0;
    for (double x : xs) {
      reference += x;
      magnitude += std::abs(x);
    }
    CHECK(std::abs(forward_sum.value() - static_cast<double>(reference)) <=
          1e-15 * magnitude + 1e-25);
  }
}

TEST_CASE("ExactSum handles negative addends and exact cancellation") {
  ExactSum s;
  s.add(0.1);
  s.add(-0.1);
  s.add(3.5);
  s.add(-1.25);
  CHECK(s.value() == 2.25);
  ExactSum empty;
  CHECK(empty.value() == 0.0);
}

namespace {

// Exact sum in 256-bit arithmetic, rounded once to double.
double mpfr_rounded_sum(const std::vector<double>& xs) {
  mpfr_t acc;
  mpfr_init2(acc, 256);
  mpfr_set_zero(acc, 1);
  for (double x : xs) mpfr_add_d(acc, acc, x, MPFR_RNDN);
  const double out = mpfr_get_d(acc, MPFR_RNDN);
  mpfr_clear(acc);
  return out;
}

}  // namespace

TEST_CASE("ExactSum rounds the grid value once, to nearest even") {
  // half-way cases that a limb-by-limb evaluation can round twice
  const double ulp_half = std::ldexp(1.0, -53);
  const double grid = std::ldexp(1.0, -96);
  const std::vector<std::vector<double>> cases = {
      {1.0, ulp_half},
      {1.0, ulp_half, grid},
      {1.0, ulp_half, -grid},
      {1.0 + 2 * ulp_half, ulp_half},
      {-1.0, -ulp_half, grid},
      {1.0, ulp_half, std::ldexp(1.0, -64), -std::ldexp(1.0, -64)},
      {std::ldexp(1.0, 30), std::ldexp(1.0, -23), std::ldexp(1.0, -90)},
  };
  for (const auto& xs : cases) {
    ExactSum s;
    for (double x : xs) s.add(x);
    CHECK(s.value() == mpfr_rounded_sum(xs));
  }

  Rng rng(14);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> xs(1 + rng.below(12));
    for (double& x : xs) {
      // keep every mantissa bit on the 2^-96 grid so the accumulator is exact
      const int e = static_cast<int>(rng.below(60)) - 40;
      x = std::ldexp(std::floor(rng.uniform(-1.0, 1.0) * 9007199254740992.0), e - 53);
    }
    ExactSum s;
    for (double x : xs) s.add(x);
    CHECK(s.value() == mpfr_rounded_sum(xs));
  }
}
