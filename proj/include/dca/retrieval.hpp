#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dca/metric.hpp"

namespace dca {

enum class RetrievalMode { kEuclidean, kDcaRerank };

std::string_view to_string(RetrievalMode mode) noexcept;
RetrievalMode parse_retrieval_mode(std::string_view name);

struct RetrievalReport {
  double map = 0.0;
  std::vector<double> cmc;           // cmc[k] = fraction of queries matched within rank k + 1
  std::vector<double> per_query_ap;
  RetrievalMode mode = RetrievalMode::kEuclidean;
  double lambda = 0.0;               // meaningful for kDcaRerank only
};

/// Query-by-gallery distance matrix for the chosen mode. kDcaRerank computes
/// the context-aware distance over queries and gallery together and returns
/// the query-to-gallery block.
Matrix retrieval_distances(const Matrix& queries, const Matrix& gallery, RetrievalMode mode,
                           double lambda);

/// Ranks the gallery for each query (ties by gallery index) and scores it.
/// AP is the mean precision at the ranks of the relevant items, summed in rank
/// order; mAP is the correctly rounded sum of APs divided by the query count.
RetrievalReport evaluate(const EmbeddingBatch& queries, const EmbeddingBatch& gallery,
                         RetrievalMode mode, double lambda = 0.5);

/// Scores a precomputed query x gallery distance matrix.
RetrievalReport score_rankings(const Matrix& distances, std::span<const Label> query_labels,
                               std::span<const Label> gallery_labels);

/// CSV with header "metric,mode,lambda,value": one map row, then cmc_<k>
/// for every rank. `preamble` lines are written first, each prefixed "# ".
void write_report_csv(std::ostream& out, const std::vector<RetrievalReport>& reports,
                      const std::vector<std::string>& preamble = {});

/// Fixed-width table of mAP and rank-1/5/10.
void print_report_table(std::ostream& out, const std::vector<RetrievalReport>& reports);

}  // namespace dca
