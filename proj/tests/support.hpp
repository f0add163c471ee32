#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dca/matrix.hpp"
#include "dca/metric.hpp"
#include "dca/rng.hpp"

namespace testing {

inline std::vector<dca::Label> pk_labels(std::size_t p, std::size_t k) {
  std::vector<dca::Label> labels;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < k; ++j) labels.push_back(static_cast<dca::Label>(i));
  return labels;
}

inline dca::Matrix random_matrix(std::size_t rows, std::size_t cols, dca::Rng& rng,
                                 double scale = 1.0) {
  dca::Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

inline dca::EmbeddingBatch random_pk_batch(std::size_t p, std::size_t k, std::size_t dim,
                                           dca::Rng& rng, double scale = 1.0) {
  return {random_matrix(p * k, dim, rng, scale), pk_labels(p, k)};
}

/// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
inline dca::Matrix random_orthogonal(std::size_t n, dca::Rng& rng) {
  dca::Matrix q = random_matrix(n, n, rng);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (std::size_t r = 0; r < n; ++r) dot += q(r, c) * q(r, prev);
      for (std::size_t r = 0; r < n; ++r) q(r, c) -= dot * q(r, prev);
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < n; ++r) norm += q(r, c) * q(r, c);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < n; ++r) q(r, c) /= norm;
  }
  return q;
}

/// rows of x times q
inline dca::Matrix rotate(const dca::Matrix& x, const dca::Matrix& q) {
  dca::Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) s += x(i, k) * q(k, c);
      out(i, c) = s;
    }
  return out;
}

inline dca::Matrix translate(const dca::Matrix& x, const std::vector<double>& shift) {
  dca::Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) out(i, c) += shift[c];
  return out;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, dca::Rng& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  return perm;
}

/// out row i = x row perm[i]
inline dca::EmbeddingBatch permute(const dca::EmbeddingBatch& b,
                                   const std::vector<std::size_t>& perm) {
  dca::EmbeddingBatch out{dca::Matrix(b.size(), b.dim()), {}};
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t c = 0; c < b.dim(); ++c) out.features(i, c) = b.features(perm[i], c);
    out.labels.push_back(b.labels[perm[i]]);
  }
  return out;
}

/// true when out(i, j) == m(perm[i], perm[j]) bit for bit
inline bool permuted_equal(const dca::Matrix& m, const dca::Matrix& out,
                           const std::vector<std::size_t>& perm) {
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < perm.size(); ++j)
      if (out(i, j) != m(perm[i], perm[j])) return false;
  return true;
}

inline bool symmetric_exact(const dca::Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

}  // namespace testing
