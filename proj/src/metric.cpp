#include "dca/metric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dca/errors.hpp"
#include "dca/kernels.hpp"

namespace dca {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw ValidationError(std::string(what) + " must be square, got " + std::to_string(m.rows()) +
                          "x" + std::to_string(m.cols()));
  }
}

}  // namespace

void validate_finite(const Matrix& features) {
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (double v : features.row(i)) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite feature value in row " + std::to_string(i));
      }
    }
  }
}

void validate(const EmbeddingBatch& batch) {
  if (batch.size() < 2) {
    throw ValidationError("batch needs at least 2 rows, got " + std::to_string(batch.size()));
  }
  if (batch.dim() < 1) throw ValidationError("batch feature dimension must be at least 1");
  if (batch.labels.size() != batch.size()) {
    throw ValidationError("batch has " + std::to_string(batch.size()) + " rows but " +
                          std::to_string(batch.labels.size()) + " labels");
  }
  validate_finite(batch.features);
}

void validate_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ValidationError("lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
}

Matrix pairwise_distances(const EmbeddingBatch& batch) {
  validate(batch);
  return pairwise_distances(batch.features);
}

Matrix pairwise_distances(const Matrix& features) {
  validate_finite(features);
  const std::size_t n = features.rows();
  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sq = kernels::squared_distance(features.row(i), features.row(j));
      const double d = std::sqrt(std::max(sq, 0.0));
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

Matrix gaussian_similarity(const Matrix& dist) {
  require_square(dist, "distance matrix");
  const std::size_t n = dist.rows();
  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dist(i, j);
      if (!(d >= 0.0) || !std::isfinite(d)) {
        throw ValidationError("distance matrix entry (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") is negative or non-finite");
      }
      sim(i, j) = i == j ? 1.0 : std::exp(-std::min(d, kMaxExponent));
    }
  }
  return sim;
}

Matrix jaccard_distances(const Matrix& sim) {
  Matrix unused;
  return jaccard_distances(sim, unused);
}

Matrix jaccard_distances(const Matrix& sim, Matrix& union_mass) {
  require_square(sim, "similarity matrix");
  const std::size_t n = sim.rows();
  if (n < 2) throw ValidationError("jaccard distances need at least 2 rows");
  Matrix out(n, n);
  union_mass = Matrix(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ExactSum lo;
      ExactSum hi;
      kernels::context_overlap(sim.row(i), sim.row(j), lo, hi);
      const double denom = std::max(hi.value(), kJaccardFloor);
      const double v = 1.0 - lo.value() / denom;
      union_mass(i, j) = denom;
      union_mass(j, i) = denom;
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

namespace {

// weighted and dca from the dist and jaccard already in the bundle
void blend(DcaDistances& out) {
  const std::size_t n = out.dist.rows();
  out.weighted = Matrix(n, n);
  out.dca = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = out.dist(i, j);
      const double jac = out.jaccard(i, j);
      const double w = jac * d;
      out.weighted(i, j) = w;
      out.dca(i, j) = (1.0 - out.lambda) * d + out.lambda * jac + w;
    }
  }
}

}  // namespace

DcaDistances dca_from_distances(Matrix dist, double lambda) {
  validate_lambda(lambda);
  DcaDistances out;
  out.lambda = lambda;
  out.sim = gaussian_similarity(dist);
  out.jaccard = jaccard_distances(out.sim, out.union_mass);
  out.dist = std::move(dist);
  blend(out);
  return out;
}

DcaDistances dca_with_context(Matrix dist, const Matrix& jaccard, double lambda) {
  validate_lambda(lambda);
  if (jaccard.rows() != dist.rows() || jaccard.cols() != dist.cols()) {
    throw ValidationError("context matrix shape does not match the distance matrix");
  }
  DcaDistances out;
  out.lambda = lambda;
  out.sim = gaussian_similarity(dist);
  out.jaccard = jaccard;
  out.dist = std::move(dist);
  blend(out);
  return out;
}

DcaDistances dca_distances(const EmbeddingBatch& batch, double lambda) {
  validate_lambda(lambda);
  return dca_from_distances(pairwise_distances(batch), lambda);
}

DcaDistances dca_distances(const Matrix& features, double lambda) {
  validate_lambda(lambda);
  return dca_from_distances(pairwise_distances(features), lambda);
}

}  // namespace dca
