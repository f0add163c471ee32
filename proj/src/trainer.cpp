#include "dca/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dca/errors.hpp"
#include "dca/gradients.hpp"

namespace dca {

std::vector<LrMilestone> TrainConfig::default_schedule(std::size_t steps) {
  const auto at = [steps](double fraction) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(steps)));
  };
  return {{at(0.55), 0.1}, {at(0.80), 0.1}};
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) {
    throw ValidationError("learning rate must be positive, got " + std::to_string(cfg.lr));
  }
  for (std::size_t k = 1; k < cfg.milestones.size(); ++k) {
    if (cfg.milestones[k].step < cfg.milestones[k - 1].step) {
      throw ValidationError("learning-rate milestones must be in step order");
    }
  }
  validate(cfg.loss);
  validate(cfg.pk);
}

double learning_rate_at(const TrainConfig& cfg, std::size_t step) {
  double lr = cfg.lr;
  for (const auto& m : cfg.milestones) {
    if (step >= m.step) lr *= m.factor;
  }
  return lr;
}

namespace {

Matrix gather_rows(const Matrix& source, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), source.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = source.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

struct StepResult {
  double loss;
  MlpGradients grads;
};

StepResult loss_and_gradients(const MlpModel& model, const Matrix& inputs,
                              std::span<const Label> labels, const LossConfig& cfg) {
  ForwardCache cache;
  EmbeddingBatch embedded{forward(model, inputs, cache), {labels.begin(), labels.end()}};
  const LossTrace trace = trace_loss(embedded, cfg);
  const Matrix upstream = backward_from_trace(trace, embedded.features, cfg);
  return {trace.output.value, backward(model, cache, upstream)};
}

std::vector<double> flatten(const MlpGradients& g) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    flat.insert(flat.end(), g.weights[l].values().begin(), g.weights[l].values().end());
    flat.insert(flat.end(), g.bias[l].begin(), g.bias[l].end());
  }
  return flat;
}

std::vector<double*> parameter_slots(MlpModel& model) {
  std::vector<double*> slots;
  for (auto& layer : model.layers()) {
    for (double& v : layer.weights.values()) slots.push_back(&v);
    for (double& v : layer.bias) slots.push_back(&v);
  }
  return slots;
}

double infinity_norm(const Matrix& w) {
  double worst = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double s = 0.0;
    for (double v : w.row(r)) s += std::abs(v);
    worst = std::max(worst, s);
  }
  return worst;
}

}  // namespace

TrainResult train(const EmbeddingBatch& dataset, MlpModel model, const TrainConfig& cfg) {
  validate(cfg);
  validate(model);
  validate(dataset);
  if (dataset.dim() != model.input_dim()) {
    throw ValidationError("dataset width " + std::to_string(dataset.dim()) +
                          " does not match model input " + std::to_string(model.input_dim()));
  }
  TrainResult result;
  result.loss_history.reserve(cfg.steps);
  Rng rng(cfg.seed);
  AdamState state = make_adam_state(model);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto rows = pk_sample(dataset.labels, cfg.pk, rng);
    std::vector<Label> labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) labels.push_back(dataset.labels[r]);
    const StepResult s = loss_and_gradients(model, gather_rows(dataset.features, rows), labels,
                                            cfg.loss);
    result.loss_history.push_back(s.loss);
    adam_step(model, s.grads, state, learning_rate_at(cfg, step), cfg.adam);
  }
  result.model = std::move(model);
  return result;
}

EndToEndGradient end_to_end_gradient(const MlpModel& model, const Matrix& inputs,
                                     std::span<const Label> labels, const LossConfig& cfg) {
  const StepResult s = loss_and_gradients(model, inputs, labels, cfg);
  return {s.loss, flatten(s.grads)};
}

EndToEndCheck end_to_end_gradient_check(const MlpModel& model, const Matrix& inputs,
                                        std::span<const Label> labels, const LossConfig& cfg,
                                        double h) {
  if (!(h >= 1e-8 && h <= 1e-3)) {
    throw ValidationError("finite-difference step must lie in [1e-8, 1e-3]");
  }
  const EndToEndGradient base = end_to_end_gradient(model, inputs, labels, cfg);
  EndToEndCheck check;

  // Largest change of any embedding coordinate when one parameter moves by h:
  // the unit's preactivation moves by at most h * max(1, |input|), then every
  // later layer amplifies by at most its infinity norm.
  ForwardCache cache;
  EmbeddingBatch embedded{forward(model, inputs, cache), {labels.begin(), labels.end()}};
  const auto& layers = model.layers();
  double reach = 0.0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    double in_max = 1.0;
    for (double v : cache.inputs[l].values()) in_max = std::max(in_max, std::abs(v));
    double gain = 1.0;
    for (std::size_t m = l + 1; m < layers.size(); ++m) {
      gain *= std::max(1.0, infinity_norm(layers[m].weights));
    }
    reach = std::max(reach, h * in_max * gain);
    if (l + 1 < layers.size()) {
      const double pre_reach = h * in_max * 2.0;
      for (double v : cache.preactivations[l].values()) {
        if (std::abs(v) < pre_reach) check.near_kink = true;
      }
    }
  }
  if (model.normalize_output()) reach *= 4.0;
  const LossTrace trace = trace_loss(embedded, cfg);
  if (near_kink(trace, cfg, reach)) check.near_kink = true;

  MlpModel probe = model;
  const auto slots = parameter_slots(probe);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const double x = *slots[k];
    *slots[k] = x + h;
    const double up = loss_forward({forward(probe, inputs), {labels.begin(), labels.end()}}, cfg).value;
    *slots[k] = x - h;
    const double down =
        loss_forward({forward(probe, inputs), {labels.begin(), labels.end()}}, cfg).value;
    *slots[k] = x;
    const double numeric = (up - down) / (2.0 * h);
    const double a = base.analytic[k];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (err > check.max_relative_error) {
      check.max_relative_error = err;
      check.worst_parameter = k;
      check.worst_analytic = a;
      check.worst_numeric = numeric;
    }
  }
  return check;
}

}  // namespace dca
