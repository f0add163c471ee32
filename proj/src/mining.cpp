#include "dca/mining.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "dca/errors.hpp"

namespace dca {

void validate(const PkSpec& spec) {
  if (spec.identities < 2 || spec.samples < 2) {
    throw ValidationError("PK sampling needs P >= 2 and K >= 2, got P=" +
                          std::to_string(spec.identities) + " K=" + std::to_string(spec.samples));
  }
}

std::vector<std::size_t> pk_sample(std::span<const Label> dataset_labels, const PkSpec& spec,
                                   Rng& rng) {
  validate(spec);
  std::map<Label, std::vector<std::size_t>> by_identity;
  for (std::size_t i = 0; i < dataset_labels.size(); ++i) {
    by_identity[dataset_labels[i]].push_back(i);
  }
  if (by_identity.size() < spec.identities) {
    throw ValidationError("PK sampling needs " + std::to_string(spec.identities) +
                          " identities but the dataset has " + std::to_string(by_identity.size()));
  }

  std::vector<const std::vector<std::size_t>*> pools;
  pools.reserve(by_identity.size());
  for (const auto& [label, rows] : by_identity) pools.push_back(&rows);

  // partial Fisher-Yates over identities
  for (std::size_t p = 0; p < spec.identities; ++p) {
    const std::size_t pick = p + rng.below(pools.size() - p);
    std::swap(pools[p], pools[pick]);
  }

  std::vector<std::size_t> batch;
  batch.reserve(spec.batch_size());
  for (std::size_t p = 0; p < spec.identities; ++p) {
    std::vector<std::size_t> rows = *pools[p];
    if (rows.size() >= spec.samples) {
      for (std::size_t k = 0; k < spec.samples; ++k) {
        const std::size_t pick = k + rng.below(rows.size() - k);
        std::swap(rows[k], rows[pick]);
        batch.push_back(rows[k]);
      }
    } else {
      for (std::size_t k = 0; k < spec.samples; ++k) batch.push_back(rows[rng.below(rows.size())]);
    }
  }
  return batch;
}

std::vector<std::size_t> pk_sample(std::span<const Label> dataset_labels, const PkSpec& spec) {
  Rng rng(spec.seed);
  return pk_sample(dataset_labels, spec, rng);
}

TripletSet mine_batch_hard(const Matrix& dist, std::span<const Label> labels) {
  const std::size_t n = labels.size();
  if (dist.rows() != n || dist.cols() != n) {
    throw ValidationError("distance matrix shape does not match " + std::to_string(n) + " labels");
  }
  TripletSet out;
  out.variant = MiningVariant::kBatchHard;
  out.triplets.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::optional<std::size_t> pos;
    std::optional<std::size_t> neg;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      if (labels[j] == labels[a]) {
        if (!pos || dist(a, j) > dist(a, *pos)) pos = j;
      } else {
        if (!neg || dist(a, j) < dist(a, *neg)) neg = j;
      }
    }
    if (!pos || !neg) {
      throw ValidationError("anchor " + std::to_string(a) + " has no " +
                            (pos ? "negative" : "positive"));
    }
    out.triplets.push_back({a, *pos, *neg});
  }
  return out;
}

TripletSet enumerate_batch_all(std::span<const Label> labels) {
  TripletSet out;
  out.variant = MiningVariant::kBatchAll;
  const std::size_t n = labels.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      for (std::size_t q = 0; q < n; ++q) {
        if (labels[q] != labels[a]) out.triplets.push_back({a, p, q});
      }
    }
  }
  return out;
}

std::uint64_t batch_all_count(std::uint64_t p, std::uint64_t k) noexcept {
  const std::uint64_t n = p * k;
  return n * (n - k) * (k - 1);
}

std::optional<PkShape> pk_shape(std::span<const Label> labels) {
  std::map<Label, std::size_t> counts;
  for (Label l : labels) ++counts[l];
  if (counts.empty()) return std::nullopt;
  const std::size_t k = counts.begin()->second;
  for (const auto& [label, c] : counts) {
    if (c != k) return std::nullopt;
  }
  return PkShape{counts.size(), k};
}

}  // namespace dca
