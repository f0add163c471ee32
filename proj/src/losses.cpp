#include "dca/losses.hpp"

#include <cmath>
#include <map>
#include <string>

#include "dca/errors.hpp"
#include "dca/exact_sum.hpp"

namespace dca {

std::string_view to_string(LossVariant v) noexcept {
  switch (v) {
    case LossVariant::kTriBatchHard: return "tri_bh";
    case LossVariant::kTriBatchAll: return "tri_ba";
    case LossVariant::kDcaBatchHard: return "dca_bh";
    case LossVariant::kDcaBatchAll: return "dca_ba";
  }
  return "unknown";
}

LossVariant parse_loss_variant(std::string_view name) {
  for (LossVariant v : {LossVariant::kTriBatchHard, LossVariant::kTriBatchAll,
                        LossVariant::kDcaBatchHard, LossVariant::kDcaBatchAll}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown loss variant '" + std::string(name) +
                    "' (expected tri_bh, tri_ba, dca_bh or dca_ba)");
}

LossConfig LossConfig::defaults(LossVariant v) {
  LossConfig cfg;
  cfg.variant = v;
  cfg.nonzero_average = is_batch_all(v);
  return cfg;
}

void validate(const LossConfig& cfg) {
  if (!(cfg.margin >= 0.0) || !std::isfinite(cfg.margin)) {
    throw ValidationError("margin must be a finite nonnegative number, got " +
                          std::to_string(cfg.margin));
  }
  validate_lambda(cfg.lambda);
}

void validate_pk_structure(std::span<const Label> labels) {
  std::map<Label, std::size_t> counts;
  for (Label l : labels) ++counts[l];
  if (counts.size() < 2) {
    throw ValidationError("batch needs at least 2 identities, got " +
                          std::to_string(counts.size()));
  }
  for (const auto& [label, c] : counts) {
    if (c < 2) {
      throw ValidationError("identity " + std::to_string(label) +
                            " has a single sample; every identity needs a positive");
    }
  }
}

namespace {

LossTrace finish(DcaDistances distances, std::span<const Label> labels, const LossConfig& cfg) {
  LossTrace trace;
  trace.labels.assign(labels.begin(), labels.end());
  const Matrix& metric = uses_context(cfg.variant) ? distances.dca : distances.dist;
  trace.triplets = is_batch_all(cfg.variant) ? enumerate_batch_all(labels)
                                             : mine_batch_hard(metric, labels);
  trace.margins.reserve(trace.triplets.triplets.size());
  ExactSum total;
  std::size_t active = 0;
  for (const Triplet& t : trace.triplets.triplets) {
    const double m = metric(t.anchor, t.positive) - metric(t.anchor, t.negative) + cfg.margin;
    trace.margins.push_back(m);
    if (m > 0.0) {
      ++active;
      total.add(m);
    }
  }
  trace.output.total_count = trace.triplets.triplets.size();
  trace.output.active_count = active;
  trace.normalizer = static_cast<double>(cfg.nonzero_average ? active : trace.output.total_count);
  trace.output.value = active == 0 ? 0.0 : total.value() / trace.normalizer;
  trace.distances = std::move(distances);
  return trace;
}

void check_inputs(const EmbeddingBatch& batch, const LossConfig& cfg) {
  validate(cfg);
  validate(batch);
  validate_pk_structure(batch.labels);
}

}  // namespace

LossTrace trace_loss(const EmbeddingBatch& batch, const LossConfig& cfg) {
  check_inputs(batch, cfg);
  Matrix dist = pairwise_distances(batch.features);
  DcaDistances distances;
  if (uses_context(cfg.variant)) {
    distances = dca_from_distances(std::move(dist), cfg.lambda);
  } else {
    distances.dist = std::move(dist);
    distances.lambda = cfg.lambda;
  }
  return finish(std::move(distances), batch.labels, cfg);
}

LossTrace trace_loss_with_context(const EmbeddingBatch& batch, const LossConfig& cfg,
                                  const Matrix& context) {
  check_inputs(batch, cfg);
  if (!uses_context(cfg.variant)) return trace_loss(batch, cfg);
  return finish(dca_with_context(pairwise_distances(batch.features), context, cfg.lambda),
                batch.labels, cfg);
}

LossOutput loss_forward(const EmbeddingBatch& batch, const LossConfig& cfg) {
  return trace_loss(batch, cfg).output;
}

}  // namespace dca
