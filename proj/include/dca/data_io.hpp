#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "dca/metric.hpp"

namespace dca {

/// Isotropic Gaussian identity clusters.
struct SynthSpec {
  std::size_t identities = 16;   // C
  std::size_t samples = 32;      // per identity
  std::size_t dim = 8;           // D_in
  double separation = 10.0;      // minimum centroid distance, in units of sigma
  double sigma = 1.0;
  std::uint64_t seed = 42;
};

void validate(const SynthSpec& spec);

struct SyntheticData {
  EmbeddingBatch data;  // identity-major rows, labels 0..C-1
  Matrix centroids;
};

/// Draws C standard-normal centroids, rescales them so the closest pair sits
/// exactly separation * sigma apart, then adds N(0, sigma^2) noise per sample.
SyntheticData generate(const SynthSpec& spec);

inline constexpr char kEmbeddingMagic[] = "DCAE";
inline constexpr std::uint16_t kEmbeddingVersion = 1;

/// "DCAE" | u16 version | u64 N | u32 D | f64 N*D row-major | u32 N labels |
/// u32 length | metadata text. Little-endian.
std::vector<char> encode_embeddings(const EmbeddingBatch& batch, const std::string& metadata = {});
EmbeddingBatch decode_embeddings(const std::vector<char>& bytes, std::string* metadata = nullptr);

void write_embeddings(const EmbeddingBatch& batch, const std::string& path,
                      const std::string& metadata = {});
EmbeddingBatch read_embeddings(const std::string& path, std::string* metadata = nullptr);

/// Text import with header "label,f0,f1,...".
EmbeddingBatch read_embeddings_csv(const std::string& path);

/// Loads either format: CSV when the path ends in ".csv", binary otherwise.
EmbeddingBatch load_dataset(const std::string& path);

/// Per identity (rows in file order): the last `holdout` rows are held out
/// for retrieval, the first `queries` of those become queries and the rest
/// gallery; everything else is training data.
struct DataSplit {
  EmbeddingBatch train;
  EmbeddingBatch queries;
  EmbeddingBatch gallery;
};

DataSplit split_holdout(const EmbeddingBatch& dataset, std::size_t holdout, std::size_t queries);

}  // namespace dca
