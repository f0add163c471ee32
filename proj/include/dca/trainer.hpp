#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dca/embedder.hpp"
#include "dca/losses.hpp"
#include "dca/metric.hpp"
#include "dca/mining.hpp"

namespace dca {

struct LrMilestone {
  std::size_t step;  // the factor applies from this step on (0-based)
  double factor;
};

struct TrainConfig {
  std::size_t steps = 300;
  double lr = 1e-3;
  std::vector<LrMilestone> milestones;  // strictly increasing steps
  AdamConfig adam;
  std::uint64_t seed = 42;
  LossConfig loss;
  PkSpec pk;

  /// Two x0.1 decays at 55% and 80% of the run.
  static std::vector<LrMilestone> default_schedule(std::size_t steps);
};

void validate(const TrainConfig& cfg);

double learning_rate_at(const TrainConfig& cfg, std::size_t step);

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // one value per step, before the update
};

/// Per step: PK-sample a batch, embed it, take the loss gradient through the
/// embedder and apply one Adam update. The sampler is seeded from cfg.seed.
TrainResult train(const EmbeddingBatch& dataset, MlpModel model, const TrainConfig& cfg);

/// Loss of the embedded batch and its gradient with respect to every model
/// parameter, in layer order (weights row-major, then biases).
struct EndToEndGradient {
  double loss = 0.0;
  std::vector<double> analytic;
};

EndToEndGradient end_to_end_gradient(const MlpModel& model, const Matrix& inputs,
                                     std::span<const Label> labels, const LossConfig& cfg);

struct EndToEndCheck {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;  // index into EndToEndGradient::analytic
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool near_kink = false;
};

/// Central-difference check of end_to_end_gradient over all parameters.
EndToEndCheck end_to_end_gradient_check(const MlpModel& model, const Matrix& inputs,
                                        std::span<const Label> labels, const LossConfig& cfg,
                                        double h = 1e-5);

}  // namespace dca
