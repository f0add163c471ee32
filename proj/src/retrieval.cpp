#include "dca/retrieval.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "dca/errors.hpp"
#include "dca/exact_sum.hpp"
#include "dca/kernels.hpp"

namespace dca {

std::string_view to_string(RetrievalMode mode) noexcept {
  return mode == RetrievalMode::kEuclidean ? "euclidean" : "dca";
}

RetrievalMode parse_retrieval_mode(std::string_view name) {
  if (name == "euclidean") return RetrievalMode::kEuclidean;
  if (name == "dca" || name == "dca_rerank") return RetrievalMode::kDcaRerank;
  throw ConfigError("unknown retrieval mode '" + std::string(name) +
                    "' (expected euclidean or dca)");
}

Matrix retrieval_distances(const Matrix& queries, const Matrix& gallery, RetrievalMode mode,
                           double lambda) {
  if (queries.cols() != gallery.cols()) {
    throw ValidationError("query width " + std::to_string(queries.cols()) +
                          " does not match gallery width " + std::to_string(gallery.cols()));
  }
  validate_finite(queries);
  validate_finite(gallery);
  const std::size_t nq = queries.rows();
  const std::size_t ng = gallery.rows();
  Matrix out(nq, ng);
  if (mode == RetrievalMode::kEuclidean) {
    for (std::size_t q = 0; q < nq; ++q)
      for (std::size_t g = 0; g < ng; ++g)
        out(q, g) = std::sqrt(std::max(kernels::squared_distance(queries.row(q), gallery.row(g)), 0.0));
    return out;
  }
  Matrix joint(nq + ng, queries.cols());
  for (std::size_t q = 0; q < nq; ++q) std::ranges::copy(queries.row(q), joint.row(q).begin());
  for (std::size_t g = 0; g < ng; ++g) std::ranges::copy(gallery.row(g), joint.row(nq + g).begin());
  const DcaDistances dd = dca_distances(joint, lambda);
  for (std::size_t q = 0; q < nq; ++q)
    for (std::size_t g = 0; g < ng; ++g) out(q, g) = dd.dca(q, nq + g);
  return out;
}

RetrievalReport score_rankings(const Matrix& distances, std::span<const Label> query_labels,
                               std::span<const Label> gallery_labels) {
  const std::size_t nq = distances.rows();
  const std::size_t ng = distances.cols();
  if (query_labels.size() != nq || gallery_labels.size() != ng) {
    throw ValidationError("label counts do not match the distance matrix");
  }
  if (nq == 0 || ng == 0) throw ValidationError("retrieval needs at least one query and gallery item");
  const std::set<Label> present(gallery_labels.begin(), gallery_labels.end());
  for (Label l : query_labels) {
    if (!present.contains(l)) {
      throw ValidationError("query identity " + std::to_string(l) + " is absent from the gallery");
    }
  }

  RetrievalReport report;
  report.per_query_ap.reserve(nq);
  std::vector<std::size_t> first_hit_counts(ng, 0);
  std::vector<std::size_t> order(ng);
  ExactSum ap_total;
  for (std::size_t q = 0; q < nq; ++q) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto row = distances.row(q);
    std::ranges::sort(order, [&](std::size_t a, std::size_t b) {
      return row[a] < row[b] || (row[a] == row[b] && a < b);
    });
    std::size_t hits = 0;
    double precision_sum = 0.0;
    std::size_t first_hit = ng;
    for (std::size_t r = 0; r < ng; ++r) {
      if (gallery_labels[order[r]] != query_labels[q]) continue;
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
      first_hit = std::min(first_hit, r);
    }
    const double ap = precision_sum / static_cast<double>(hits);
    report.per_query_ap.push_back(ap);
    ap_total.add(ap);
    ++first_hit_counts[first_hit];
  }
  report.map = ap_total.value() / static_cast<double>(nq);
  report.cmc.resize(ng);
  std::size_t cumulative = 0;
  for (std::size_t k = 0; k < ng; ++k) {
    cumulative += first_hit_counts[k];
    report.cmc[k] = static_cast<double>(cumulative) / static_cast<double>(nq);
  }
  return report;
}

RetrievalReport evaluate(const EmbeddingBatch& queries, const EmbeddingBatch& gallery,
                         RetrievalMode mode, double lambda) {
  if (queries.labels.size() != queries.size() || gallery.labels.size() != gallery.size()) {
    throw ValidationError("label count does not match feature rows");
  }
  if (mode == RetrievalMode::kDcaRerank) validate_lambda(lambda);
  RetrievalReport report = score_rankings(
      retrieval_distances(queries.features, gallery.features, mode, lambda), queries.labels,
      gallery.labels);
  report.mode = mode;
  report.lambda = mode == RetrievalMode::kDcaRerank ? lambda : 0.0;
  return report;
}

void write_report_csv(std::ostream& out, const std::vector<RetrievalReport>& reports,
                      const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "metric,mode,lambda,value\n";
  for (const auto& r : reports) {
    const std::string lambda =
        r.mode == RetrievalMode::kDcaRerank ? fmt::format("{}", r.lambda) : std::string("-");
    fmt::print(out, "map,{},{},{}\n", to_string(r.mode), lambda, r.map);
    for (std::size_t k = 0; k < r.cmc.size(); ++k) {
      fmt::print(out, "cmc_{},{},{},{}\n", k + 1, to_string(r.mode), lambda, r.cmc[k]);
    }
  }
}

void print_report_table(std::ostream& out, const std::vector<RetrievalReport>& reports) {
  const auto rank = [](const RetrievalReport& r, std::size_t k) {
    return r.cmc.empty() ? 0.0 : r.cmc[std::min(k, r.cmc.size()) - 1];
  };
  fmt::print(out, "{:<10} {:>7} {:>8} {:>8} {:>8} {:>8}\n", "mode", "lambda", "mAP", "rank-1",
             "rank-5", "rank-10");
  for (const auto& r : reports) {
    const std::string lambda =
        r.mode == RetrievalMode::kDcaRerank ? fmt::format("{:.2f}", r.lambda) : std::string("-");
    fmt::print(out, "{:<10} {:>7} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n", to_string(r.mode), lambda,
               r.map, rank(r, 1), rank(r, 5), rank(r, 10));
  }
}

}  // namespace dca
