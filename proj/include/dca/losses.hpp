#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dca/metric.hpp"
#include "dca/mining.hpp"

namespace dca {

enum class LossVariant { kTriBatchHard, kTriBatchAll, kDcaBatchHard, kDcaBatchAll };

/// "tri_bh", "tri_ba", "dca_bh", "dca_ba".
std::string_view to_string(LossVariant v) noexcept;
LossVariant parse_loss_variant(std::string_view name);

constexpr bool uses_context(LossVariant v) noexcept {
  return v == LossVariant::kDcaBatchHard || v == LossVariant::kDcaBatchAll;
}
constexpr bool is_batch_all(LossVariant v) noexcept {
  return v == LossVariant::kTriBatchAll || v == LossVariant::kDcaBatchAll;
}

inline constexpr double kDefaultMargin = 1.2;
inline constexpr double kDefaultLambda = 0.5;

struct LossConfig {
  LossVariant variant = LossVariant::kDcaBatchHard;
  double margin = kDefaultMargin;
  double lambda = kDefaultLambda;  // ignored by the plain triplet variants
  bool nonzero_average = false;
  bool detach_context = false;

  /// Defaults for a variant: non-zero averaging on for batch-all only.
  static LossConfig defaults(LossVariant v);
};

void validate(const LossConfig& cfg);

struct LossOutput {
  double value = 0.0;
  std::size_t active_count = 0;  // triplets with a positive hinge
  std::size_t total_count = 0;
};

inline double hinge(double x) noexcept { return x > 0.0 ? x : 0.0; }

/// Everything the forward pass computed, for reuse by the backward pass.
struct LossTrace {
  DcaDistances distances;        // only dist is filled for plain triplet variants
  std::vector<Label> labels;
  TripletSet triplets;
  std::vector<double> margins;   // d(a,p) - d(a,n) + margin, per triplet
  LossOutput output;
  double normalizer = 1.0;       // count the hinge sum was divided by
};

/// Rejects label lists where some identity has a single sample or where there
/// is only one identity.
void validate_pk_structure(std::span<const Label> labels);

LossTrace trace_loss(const EmbeddingBatch& batch, const LossConfig& cfg);

/// Forward pass with the Jaccard matrix held at `context` instead of being
/// recomputed from the features (DCA variants only).
LossTrace trace_loss_with_context(const EmbeddingBatch& batch, const LossConfig& cfg,
                                  const Matrix& context);

LossOutput loss_forward(const EmbeddingBatch& batch, const LossConfig& cfg);

}  // namespace dca
