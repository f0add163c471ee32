#pragma once

// Naive reference implementations used only by tests. They follow the
// formulas term by term with plain loops and share no code with the library
// beyond the Matrix container.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dca/matrix.hpp"
#include "dca/metric.hpp"

namespace oracle {

using dca::Label;
using dca::Matrix;

inline Matrix distances(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      d(i, j) = std::sqrt(s);
    }
  return d;
}

inline Matrix similarity(const Matrix& d) {
  Matrix v(d.rows(), d.cols());
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j) v(i, j) = std::exp(-std::min(d(i, j), 80.0));
  return v;
}

inline Matrix jaccard(const Matrix& v) {
  const std::size_t n = v.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double num = 0.0;
      double den = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double a = v(i, k);
        const double b = v(j, k);
        num += a < b ? a : b;
        den += a > b ? a : b;
      }
      out(i, j) = 1.0 - num / std::max(den, 1e-12);
    }
  return out;
}

inline Matrix dca(const Matrix& x, double lambda) {
  const Matrix d = distances(x);
  const Matrix jac = jaccard(similarity(d));
  Matrix out(d.rows(), d.cols());
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      if (i != j) out(i, j) = (1.0 - lambda) * d(i, j) + lambda * jac(i, j) + jac(i, j) * d(i, j);
  return out;
}

struct Loss {
  double value;
  std::size_t active;
  std::size_t total;
};

/// Hinge loss over every (a, p, n); divides by active or total count.
inline Loss batch_all(const Matrix& m, const std::vector<Label>& labels, double margin,
                      bool nonzero) {
  double sum = 0.0;
  std::size_t active = 0;
  std::size_t total = 0;
  const std::size_t n = labels.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q) {
        if (p == a || labels[p] != labels[a] || labels[q] == labels[a]) continue;
        ++total;
        const double h = m(a, p) - m(a, q) + margin;
        if (h > 0.0) {
          sum += h;
          ++active;
        }
      }
  if (active == 0) return {0.0, 0, total};
  return {sum / static_cast<double>(nonzero ? active : total), active, total};
}

/// Farthest positive and nearest negative by exhaustive scan.
inline Loss batch_hard(const Matrix& m, const std::vector<Label>& labels, double margin,
                       bool nonzero) {
  double sum = 0.0;
  std::size_t active = 0;
  const std::size_t n = labels.size();
  for (std::size_t a = 0; a < n; ++a) {
    double far_pos = -std::numeric_limits<double>::infinity();
    double near_neg = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      if (labels[j] == labels[a]) far_pos = std::max(far_pos, m(a, j));
      else near_neg = std::min(near_neg, m(a, j));
    }
    const double h = far_pos - near_neg + margin;
    if (h > 0.0) {
      sum += h;
      ++active;
    }
  }
  if (active == 0) return {0.0, 0, n};
  return {sum / static_cast<double>(nonzero ? active : n), active, n};
}

/// Average precision without sorting: the rank of each gallery item is one
/// plus the number of items strictly ahead of it (distance, then index).
inline double average_precision(const std::vector<double>& dist, const std::vector<Label>& gallery,
                                Label query) {
  const std::size_t g = dist.size();
  std::vector<std::size_t> relevant_ranks;
  for (std::size_t i = 0; i < g; ++i) {
    if (gallery[i] != query) continue;
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < g; ++j)
      if (dist[j] < dist[i] || (dist[j] == dist[i] && j < i)) ++ahead;
    relevant_ranks.push_back(ahead + 1);
  }
  std::sort(relevant_ranks.begin(), relevant_ranks.end());
  double s = 0.0;
  for (std::size_t k = 0; k < relevant_ranks.size(); ++k)
    s += static_cast<double>(k + 1) / static_cast<double>(relevant_ranks[k]);
  return s / static_cast<double>(relevant_ranks.size());
}

inline std::size_t first_match_rank(const std::vector<double>& dist,
                                    const std::vector<Label>& gallery, Label query) {
  std::size_t best = dist.size() + 1;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (gallery[i] != query) continue;
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < dist.size(); ++j)
      if (dist[j] < dist[i] || (dist[j] == dist[i] && j < i)) ++ahead;
    best = std::min(best, ahead + 1);
  }
  return best;
}

}  // namespace oracle
