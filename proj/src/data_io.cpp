#include "dca/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "dca/binary_io.hpp"
#include "dca/errors.hpp"
#include "dca/rng.hpp"

namespace dca {

void validate(const SynthSpec& spec) {
  if (spec.identities < 2 || spec.samples < 2) {
    throw ValidationError("synthetic data needs at least 2 identities and 2 samples each");
  }
  if (spec.dim < 1) throw ValidationError("synthetic data needs dimension at least 1");
  if (!(spec.separation > 0.0) || !(spec.sigma > 0.0)) {
    throw ValidationError("separation and sigma must be positive");
  }
}

SyntheticData generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  Matrix centroids(spec.identities, spec.dim);
  double closest = 0.0;
  do {
    for (double& v : centroids.values()) v = rng.normal();
    closest = INFINITY;
    for (std::size_t a = 0; a < spec.identities; ++a)
      for (std::size_t b = a + 1; b < spec.identities; ++b) {
        double sq = 0.0;
        for (std::size_t c = 0; c < spec.dim; ++c) {
          const double d = centroids(a, c) - centroids(b, c);
          sq += d * d;
        }
        closest = std::min(closest, std::sqrt(sq));
      }
  } while (!(closest > 0.0));
  const double scale = spec.separation * spec.sigma / closest;
  for (double& v : centroids.values()) v *= scale;

  SyntheticData out;
  out.data.features = Matrix(spec.identities * spec.samples, spec.dim);
  out.data.labels.reserve(spec.identities * spec.samples);
  std::size_t row = 0;
  for (std::size_t id = 0; id < spec.identities; ++id) {
    for (std::size_t s = 0; s < spec.samples; ++s, ++row) {
      for (std::size_t c = 0; c < spec.dim; ++c) {
        out.data.features(row, c) = centroids(id, c) + spec.sigma * rng.normal();
      }
      out.data.labels.push_back(static_cast<Label>(id));
    }
  }
  out.centroids = std::move(centroids);
  return out;
}

std::vector<char> encode_embeddings(const EmbeddingBatch& batch, const std::string& metadata) {
  validate_finite(batch.features);
  if (batch.labels.size() != batch.size()) {
    throw ValidationError("label count does not match feature rows");
  }
  binary::Writer w;
  w.bytes(std::string_view(kEmbeddingMagic, 4));
  w.put<std::uint16_t>(kEmbeddingVersion);
  w.put<std::uint64_t>(batch.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(batch.dim()));
  for (double v : batch.features.values()) w.put<double>(v);
  for (Label l : batch.labels) w.put<std::uint32_t>(l);
  w.text_block(metadata);
  return w.buffer();
}

EmbeddingBatch decode_embeddings(const std::vector<char>& bytes, std::string* metadata) {
  binary::Reader r(bytes, "embedding file");
  r.expect_magic(std::string_view(kEmbeddingMagic, 4));
  const auto version = r.get<std::uint16_t>();
  if (version != kEmbeddingVersion) {
    throw VersionError("embedding file: unsupported format version " + std::to_string(version) +
                       " (expected " + std::to_string(kEmbeddingVersion) + ")");
  }
  const auto n = r.get<std::uint64_t>();
  const auto d = r.get<std::uint32_t>();
  // each row carries d doubles and one u32 label
  r.need_items(n, std::uint64_t{d} * sizeof(double) + sizeof(std::uint32_t));
  EmbeddingBatch batch;
  batch.features = Matrix(n, d);
  for (double& v : batch.features.values()) v = r.get<double>();
  batch.labels.resize(n);
  for (Label& l : batch.labels) l = r.get<std::uint32_t>();
  std::string meta = r.text_block();
  r.expect_end();
  if (metadata != nullptr) *metadata = std::move(meta);
  return batch;
}

void write_embeddings(const EmbeddingBatch& batch, const std::string& path,
                      const std::string& metadata) {
  binary::write_file(path, encode_embeddings(batch, metadata));
}

EmbeddingBatch read_embeddings(const std::string& path, std::string* metadata) {
  return decode_embeddings(binary::read_file(path), metadata);
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("CSV line " + std::to_string(line) + ": cannot parse '" + std::string(text) +
                      "'");
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

EmbeddingBatch read_embeddings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty CSV file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "label") {
    throw FormatError(path + ": CSV header must start with 'label,f0'");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] != "f" + std::to_string(c - 1)) {
      throw FormatError(path + ": unexpected CSV column '" + std::string(header[c]) + "'");
    }
  }
  const std::size_t dim = header.size() - 1;
  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != dim + 1) {
      throw FormatError(path + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(dim + 1));
    }
    labels.push_back(parse_field<Label>(fields[0], line_no));
    for (std::size_t c = 1; c <= dim; ++c) values.push_back(parse_field<double>(fields[c], line_no));
  }
  EmbeddingBatch batch{Matrix(labels.size(), dim, std::move(values)), std::move(labels)};
  validate_finite(batch.features);
  return batch;
}

EmbeddingBatch load_dataset(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
    return read_embeddings_csv(path);
  }
  return read_embeddings(path);
}

DataSplit split_holdout(const EmbeddingBatch& dataset, std::size_t holdout, std::size_t queries) {
  if (queries < 1 || holdout <= queries) {
    throw ValidationError("holdout must exceed queries, and queries must be at least 1");
  }
  std::map<Label, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) rows[dataset.labels[i]].push_back(i);

  DataSplit split;
  std::vector<double> train_v, query_v, gallery_v;
  const auto append = [&](EmbeddingBatch& dst, std::vector<double>& values, std::size_t r) {
    const auto src = dataset.features.row(r);
    values.insert(values.end(), src.begin(), src.end());
    dst.labels.push_back(dataset.labels[r]);
  };
  for (const auto& [label, idx] : rows) {
    if (idx.size() < holdout + 2) {
      throw ValidationError("identity " + std::to_string(label) + " has " +
                            std::to_string(idx.size()) + " rows; holdout " +
                            std::to_string(holdout) + " leaves fewer than 2 for training");
    }
    const std::size_t cut = idx.size() - holdout;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k < cut) {
        append(split.train, train_v, idx[k]);
      } else if (k < cut + queries) {
        append(split.queries, query_v, idx[k]);
      } else {
        append(split.gallery, gallery_v, idx[k]);
      }
    }
  }
  const std::size_t dim = dataset.dim();
  split.train.features = Matrix(split.train.labels.size(), dim, std::move(train_v));
  split.queries.features = Matrix(split.queries.labels.size(), dim, std::move(query_v));
  split.gallery.features = Matrix(split.gallery.labels.size(), dim, std::move(gallery_v));
  return split;
}

}  // namespace dca
