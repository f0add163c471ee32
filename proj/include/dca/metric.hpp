#pragma once

#include <cstdint>
#include <vector>

#include "dca/matrix.hpp"

namespace dca {

using Label = std::uint32_t;

/// N x D features with one identity label per row.
struct EmbeddingBatch {
  Matrix features;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
};

/// Throws ValidationError unless N >= 2, D >= 1, labels match N and every
/// entry is finite. The message names the first offending row.
void validate(const EmbeddingBatch& batch);

/// Rejects non-finite entries, naming the row.
void validate_finite(const Matrix& features);

/// Exponent clamp for the Gaussian kernel: V = exp(-min(d, kMaxExponent)).
inline constexpr double kMaxExponent = 80.0;
/// Floor on the Jaccard denominator.
inline constexpr double kJaccardFloor = 1e-12;

/// All pairwise matrices of the context-aware distance, kept together so the
/// backward pass can reuse them.
struct DcaDistances {
  Matrix dist;      // Euclidean
  Matrix sim;       // exp(-dist), diagonal 1
  Matrix jaccard;   // soft Jaccard distance of similarity rows
  Matrix weighted;  // jaccard * dist
  Matrix dca;       // (1 - lambda) dist + lambda jaccard + weighted
  Matrix union_mass;  // floored sum_k max(V_ik, V_jk), the Jaccard denominator
  double lambda = 0.0;
};

Matrix pairwise_distances(const EmbeddingBatch& batch);
Matrix pairwise_distances(const Matrix& features);

Matrix gaussian_similarity(const Matrix& dist);

/// 1 - sum_k min(V_ik, V_jk) / max(sum_k max(V_ik, V_jk), eps) over every k,
/// self-terms included. Sums are order-independent (see ExactSum).
Matrix jaccard_distances(const Matrix& sim);

/// Same as jaccard_distances, also returning the floored denominators.
Matrix jaccard_distances(const Matrix& sim, Matrix& union_mass);

DcaDistances dca_distances(const EmbeddingBatch& batch, double lambda);
DcaDistances dca_distances(const Matrix& features, double lambda);

/// Builds the bundle from an already computed Euclidean matrix.
DcaDistances dca_from_distances(Matrix dist, double lambda);

/// Builds the bundle around a caller-supplied Jaccard matrix (held fixed, for
/// example, when the context term is detached). union_mass is left empty.
DcaDistances dca_with_context(Matrix dist, const Matrix& jaccard, double lambda);

void validate_lambda(double lambda);

}  // namespace dca
