#include "dca/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dca/errors.hpp"
#include "dca/kernels.hpp"

namespace dca {

Matrix backward_from_trace(const LossTrace& trace, const Matrix& features, const LossConfig& cfg) {
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  Matrix grad(n, dim);
  if (trace.output.active_count == 0) return grad;

  // dL/dD on ordered entries, then folded onto unordered pairs (upper triangle).
  const double scale = 1.0 / trace.normalizer;
  Matrix g_metric(n, n);
  const auto& triplets = trace.triplets.triplets;
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    if (!(trace.margins[t] > 0.0)) continue;
    g_metric(triplets[t].anchor, triplets[t].positive) += scale;
    g_metric(triplets[t].anchor, triplets[t].negative) -= scale;
  }

  const DcaDistances& dd = trace.distances;
  Matrix g_dist(n, n);  // upper triangle used
  if (!uses_context(cfg.variant)) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) g_dist(i, j) = g_metric(i, j) + g_metric(j, i);
  } else {
    const double lambda = dd.lambda;
    Matrix g_sim(n, n);  // ordered entries (x, k) of V
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double g = g_metric(i, j) + g_metric(j, i);
        if (g == 0.0) continue;
        const double jac = dd.jaccard(i, j);
        g_dist(i, j) += g * ((1.0 - lambda) + jac);
        if (cfg.detach_context) continue;

        const double g_jac = g * (lambda + dd.dist(i, j));
        const double denom = dd.union_mass(i, j);
        const double g_lo = -g_jac / denom;
        const double g_hi = denom > kJaccardFloor ? g_jac * (1.0 - jac) / denom : 0.0;
        const auto vi = dd.sim.row(i);
        const auto vj = dd.sim.row(j);
        for (std::size_t k = 0; k < n; ++k) {
          if (vi[k] <= vj[k]) {
            g_sim(i, k) += g_lo;
          } else {
            g_sim(j, k) += g_lo;
          }
          if (vi[k] >= vj[k]) {
            g_sim(i, k) += g_hi;
          } else {
            g_sim(j, k) += g_hi;
          }
        }
      }
    }
    // V_xk = exp(-d_xk); the diagonal is constant.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double g = g_sim(i, j) + g_sim(j, i);
        if (g == 0.0 || !(dd.dist(i, j) < kMaxExponent)) continue;
        g_dist(i, j) -= g * dd.sim(i, j);
      }
    }
  }

  std::vector<double> unit(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = g_dist(i, j);
      const double d = dd.dist(i, j);
      if (g == 0.0 || d == 0.0) continue;
      const auto xi = features.row(i);
      const auto xj = features.row(j);
      for (std::size_t c = 0; c < dim; ++c) unit[c] = (xi[c] - xj[c]) / d;
      kernels::axpy(g, unit, grad.row(i));
      kernels::axpy(-g, unit, grad.row(j));
    }
  }
  return grad;
}

GradientBuffer loss_backward(const EmbeddingBatch& batch, const LossConfig& cfg) {
  const LossTrace trace = trace_loss(batch, cfg);
  GradientBuffer out;
  out.loss_value = trace.output.value;
  out.grad = backward_from_trace(trace, batch.features, cfg);
  for (double v : out.grad.values()) {
    if (!std::isfinite(v)) throw NumericError("non-finite gradient in loss_backward");
  }
  return out;
}

namespace {

// Bound on |dD/dx| for one coordinate step, D being the metric the loss mines on.
double metric_lipschitz(const LossTrace& trace, const LossConfig& cfg) {
  if (!uses_context(cfg.variant)) return 1.0;
  double max_d = 0.0;
  for (double v : trace.distances.dist.values()) max_d = std::max(max_d, v);
  const double n = static_cast<double>(trace.distances.dist.rows());
  const double jaccard_slope = cfg.detach_context ? 0.0 : 2.0 * n;
  return (1.0 - cfg.lambda) + 1.0 + (cfg.lambda + max_d) * jaccard_slope;
}

}  // namespace

bool near_kink(const LossTrace& trace, const LossConfig& cfg, double h) {
  const Matrix& metric = uses_context(cfg.variant) ? trace.distances.dca : trace.distances.dist;
  // a triplet margin moves by at most twice the metric's slope per step
  const double reach = 2.0 * h * metric_lipschitz(trace, cfg);
  const std::size_t n = metric.rows();

  for (double m : trace.margins) {
    if (std::abs(m) < reach) return true;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (trace.distances.dist(i, j) < 2.0 * h) return true;

  if (trace.triplets.variant == MiningVariant::kBatchHard) {
    const auto& labels = trace.labels;
    for (const Triplet& t : trace.triplets.triplets) {
      const double hardest_pos = metric(t.anchor, t.positive);
      const double hardest_neg = metric(t.anchor, t.negative);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == t.anchor) continue;
        if (labels[j] == labels[t.anchor]) {
          if (j != t.positive && hardest_pos - metric(t.anchor, j) < reach) return true;
        } else if (j != t.negative && metric(t.anchor, j) - hardest_neg < reach) {
          return true;
        }
      }
    }
  }

  if (uses_context(cfg.variant) && !cfg.detach_context) {
    const Matrix& sim = trace.distances.sim;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          if (k != i && k != j && std::abs(sim(i, k) - sim(j, k)) < 2.0 * h) return true;
  }
  return false;
}

FiniteDifferenceReport finite_difference_check(const EmbeddingBatch& batch, const LossConfig& cfg,
                                               double h) {
  if (!(h >= 1e-8 && h <= 1e-3)) {
    throw ValidationError("finite-difference step must lie in [1e-8, 1e-3], got " +
                          std::to_string(h));
  }
  const LossTrace base = trace_loss(batch, cfg);
  const Matrix analytic = backward_from_trace(base, batch.features, cfg);
  const bool frozen = uses_context(cfg.variant) && cfg.detach_context;

  auto evaluate = [&](const EmbeddingBatch& shifted) {
    return frozen ? trace_loss_with_context(shifted, cfg, base.distances.jaccard).output.value
                  : loss_forward(shifted, cfg).value;
  };

  FiniteDifferenceReport report;
  report.near_kink = near_kink(base, cfg, h);
  EmbeddingBatch shifted = batch;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    for (std::size_t c = 0; c < batch.dim(); ++c) {
      const double x = batch.features(r, c);
      shifted.features(r, c) = x + h;
      const double up = evaluate(shifted);
      shifted.features(r, c) = x - h;
      const double down = evaluate(shifted);
      shifted.features(r, c) = x;

      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic(r, c);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_row = r;
        report.worst_col = c;
      }
    }
  }
  return report;
}

EmbeddingBatch sample_smooth_batch(std::size_t p, std::size_t k, std::size_t dim,
                                   const LossConfig& cfg, double h, Rng& rng,
                                   std::size_t max_attempts) {
  if (dim == 0) throw ValidationError("embedding dimension must be at least 1");
  const double scale = 1.2 / std::sqrt(static_cast<double>(dim));
  std::vector<Label> labels;
  for (std::size_t id = 0; id < p; ++id) labels.insert(labels.end(), k, static_cast<Label>(id));
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    EmbeddingBatch batch{Matrix(p * k, dim), labels};
    for (double& v : batch.features.values()) v = rng.normal(0.0, scale);
    const LossTrace trace = trace_loss(batch, cfg);
    if (trace.output.active_count > 0 && !near_kink(trace, cfg, h)) return batch;
  }
  throw NumericError("no smooth configuration found in " + std::to_string(max_attempts) +
                     " draws; try a smaller batch");
}

}  // namespace dca
