#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dca/matrix.hpp"
#include "dca/metric.hpp"
#include "dca/rng.hpp"

namespace dca {

/// P identities x K samples per batch.
struct PkSpec {
  std::size_t identities = 8;  // P
  std::size_t samples = 4;     // K
  std::uint64_t seed = 0;

  std::size_t batch_size() const noexcept { return identities * samples; }
};

void validate(const PkSpec& spec);

/// Draws P distinct identities, then K rows of each (without replacement when
/// the identity has at least K rows, with replacement otherwise). Rows come
/// back grouped by identity in draw order.
std::vector<std::size_t> pk_sample(std::span<const Label> dataset_labels, const PkSpec& spec,
                                   Rng& rng);
std::vector<std::size_t> pk_sample(std::span<const Label> dataset_labels, const PkSpec& spec);

enum class MiningVariant { kBatchHard, kBatchAll };

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;

  friend bool operator==(const Triplet&, const Triplet&) = default;
  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

struct TripletSet {
  std::vector<Triplet> triplets;
  MiningVariant variant = MiningVariant::kBatchHard;
};

/// One triplet per anchor: farthest positive, nearest negative under `dist`.
/// Ties go to the smallest index.
TripletSet mine_batch_hard(const Matrix& dist, std::span<const Label> labels);

/// Every valid (anchor, positive, negative) in lexicographic order.
TripletSet enumerate_batch_all(std::span<const Label> labels);

/// PK(PK - K)(K - 1).
std::uint64_t batch_all_count(std::uint64_t p, std::uint64_t k) noexcept;

struct PkShape {
  std::size_t identities;
  std::size_t samples;
};

/// The (P, K) of a label list in which every identity occurs equally often,
/// or nullopt for ragged batches.
std::optional<PkShape> pk_shape(std::span<const Label> labels);

}  // namespace dca
