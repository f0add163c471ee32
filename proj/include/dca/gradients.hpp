#pragma once

#include <cstddef>

#include "dca/losses.hpp"
#include "dca/rng.hpp"
#include "dca/matrix.hpp"

namespace dca {

/// dL/dfeatures and the loss value it belongs to.
struct GradientBuffer {
  Matrix grad;
  double loss_value = 0.0;
};

/// Analytic gradient of loss_forward with respect to the batch features.
///
/// Conventions at non-differentiable points: the hinge has slope 0 at 0; each
/// min/max in the Jaccard sums sends its whole gradient to the winning
/// operand, ties going to the lower-indexed row of the pair; mined triplets
/// are fixed selections; a zero distance contributes no gradient. With
/// cfg.detach_context the Jaccard matrix is treated as a constant.
GradientBuffer loss_backward(const EmbeddingBatch& batch, const LossConfig& cfg);

/// Backward pass over an existing forward trace (no recomputation).
Matrix backward_from_trace(const LossTrace& trace, const Matrix& features, const LossConfig& cfg);

struct FiniteDifferenceReport {
  double max_relative_error = 0.0;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
  /// True when a hinge, a mined selection, a Jaccard min/max or a distance is
  /// within reach of a kink for a step of h; the point should be resampled.
  bool near_kink = false;
};

/// Compares loss_backward with central differences (L(x+h) - L(x-h)) / 2h on
/// every coordinate. Relative error is |a - n| / max(|a|, |n|, 1e-8). When the
/// context is detached, the perturbed evaluations reuse the base Jaccard matrix.
FiniteDifferenceReport finite_difference_check(const EmbeddingBatch& batch, const LossConfig& cfg,
                                               double h = 1e-5);

/// Kink proximity test used by finite_difference_check.
bool near_kink(const LossTrace& trace, const LossConfig& cfg, double h);

/// Draws P x K Gaussian batches (coordinate scale 1.2 / sqrt(dim), so typical
/// distances are near 1.7) until one has active triplets and is not near a
/// kink for step h. Throws NumericError after max_attempts draws.
EmbeddingBatch sample_smooth_batch(std::size_t p, std::size_t k, std::size_t dim,
                                   const LossConfig& cfg, double h, Rng& rng,
                                   std::size_t max_attempts = 1000);

}  // namespace dca
