#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "dca/errors.hpp"
#include "dca/metric.hpp"
#include "dca/mining.hpp"
#include "doctest.h"
#include "support.hpp"

using dca::Label;
using dca::Matrix;
using dca::PkSpec;
using dca::Rng;
using dca::Triplet;

TEST_CASE("pk_sample") {
  SUBCASE("exact P x K dataset is returned as a permutation") {
    const auto labels = testing::pk_labels(3, 4);
    const auto rows = dca::pk_sample(labels, PkSpec{3, 4, 9});
    std::vector<std::size_t> sorted = rows;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  }
  SUBCASE("small identities fall back to sampling with replacement") {
    std::vector<Label> labels{0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
    const auto rows = dca::pk_sample(labels, PkSpec{3, 4, 1});
    REQUIRE(rows.size() == 12);
    std::size_t from_zero = 0;
    for (std::size_t r : rows) {
      if (labels[r] == 0) {
        ++from_zero;
        CHECK((r == 0 || r == 1));
      }
    }
    CHECK(from_zero == 4);
  }
  SUBCASE("same seed, same batch; rows grouped by identity") {
    const auto labels = testing::pk_labels(10, 6);
    const auto a = dca::pk_sample(labels, PkSpec{4, 3, 77});
    const auto b = dca::pk_sample(labels, PkSpec{4, 3, 77});
    CHECK(a == b);
    std::set<Label> ids;
    for (std::size_t p = 0; p < 4; ++p) {
      const Label id = labels[a[p * 3]];
      ids.insert(id);
      std::set<std::size_t> distinct;
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(labels[a[p * 3 + k]] == id);
        distinct.insert(a[p * 3 + k]);
      }
      CHECK(distinct.size() == 3);
    }
    CHECK(ids.size() == 4);
  }
  SUBCASE("too few identities") {
    const auto labels = testing::pk_labels(2, 4);
    CHECK_THROWS_WITH_AS(dca::pk_sample(labels, PkSpec{3, 2, 0}),
                         doctest::Contains("needs 3 identities but the dataset has 2"),
                         dca::ValidationError);
  }
  SUBCASE("P and K below 2 are rejected") {
    const auto labels = testing::pk_labels(4, 4);
    CHECK_THROWS_AS(dca::pk_sample(labels, PkSpec{1, 4, 0}), dca::ValidationError);
    CHECK_THROWS_AS(dca::pk_sample(labels, PkSpec{2, 1, 0}), dca::ValidationError);
  }
  SUBCASE("identity choice is roughly uniform") {
    const auto labels = testing::pk_labels(6, 2);
    Rng rng(4);
    std::map<Label, int> hits;
    for (int t = 0; t < 3000; ++t) {
      const auto rows = dca::pk_sample(labels, PkSpec{2, 2, 0}, rng);
      ++hits[labels[rows[0]]];
      ++hits[labels[rows[2]]];
    }
    for (const auto& [id, c] : hits) CHECK(std::abs(c - 1000) < 150);
  }
}

TEST_CASE("mine_batch_hard") {
  SUBCASE("forced triplet") {
    const std::vector<Label> labels{0, 0, 1, 1};
    const Matrix d(4, 4, {0, 1, 2, 3,  1, 0, 4, 5,  2, 4, 0, 6,  3, 5, 6, 0});
    const auto set = dca::mine_batch_hard(d, labels);
    REQUIRE(set.triplets.size() == 4);
    CHECK(set.triplets[0] == Triplet{0, 1, 2});
    CHECK(set.triplets[3] == Triplet{3, 2, 0});
  }
  SUBCASE("ties go to the smaller index") {
    const std::vector<Label> labels{0, 0, 0, 1, 1};
    Matrix d(5, 5, 1.0);
    for (std::size_t i = 0; i < 5; ++i) d(i, i) = 0.0;
    const auto set = dca::mine_batch_hard(d, labels);
    CHECK(set.triplets[0] == Triplet{0, 1, 3});
    CHECK(set.triplets[2] == Triplet{2, 0, 3});
    CHECK(set.triplets[4] == Triplet{4, 3, 0});
  }
  SUBCASE("agrees with an exhaustive scan and with batch-all membership") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const auto b = testing::random_pk_batch(4, 4, 3, rng);
      const auto dd = dca::dca_distances(b, 0.5);
      const auto hard = dca::mine_batch_hard(dd.dca, b.labels);
      const auto all = dca::enumerate_batch_all(b.labels);
      for (const Triplet& t : hard.triplets) {
        for (std::size_t j = 0; j < b.size(); ++j) {
          if (j == t.anchor) continue;
          if (b.labels[j] == b.labels[t.anchor]) {
            CHECK(dd.dca(t.anchor, j) <= dd.dca(t.anchor, t.positive));
          } else {
            CHECK(dd.dca(t.anchor, j) >= dd.dca(t.anchor, t.negative));
          }
        }
        CHECK(std::binary_search(all.triplets.begin(), all.triplets.end(), t));
      }
    }
  }
  SUBCASE("invariant under relabeling that keeps the partition") {
    Rng rng(12);
    const auto b = testing::random_pk_batch(3, 3, 2, rng);
    const Matrix d = dca::pairwise_distances(b);
    std::vector<Label> relabeled;
    for (Label l : b.labels) relabeled.push_back(100 - 7 * l);
    CHECK(dca::mine_batch_hard(d, b.labels).triplets ==
          dca::mine_batch_hard(d, relabeled).triplets);
  }
  SUBCASE("anchors without a positive or negative are rejected") {
    CHECK_THROWS_AS(dca::mine_batch_hard(Matrix(3, 3), std::vector<Label>{0, 1, 1}),
                    dca::ValidationError);
    CHECK_THROWS_AS(dca::mine_batch_hard(Matrix(2, 2), std::vector<Label>{0, 0}),
                    dca::ValidationError);
  }
}

TEST_CASE("enumerate_batch_all") {
  SUBCASE("P=2, K=2 explicit listing") {
    const auto set = dca::enumerate_batch_all(testing::pk_labels(2, 2));
    const std::vector<Triplet> expected{{0, 1, 2}, {0, 1, 3}, {1, 0, 2}, {1, 0, 3},
                                        {2, 3, 0}, {2, 3, 1}, {3, 2, 0}, {3, 2, 1}};
    CHECK(set.triplets == expected);
    CHECK(set.variant == dca::MiningVariant::kBatchAll);
  }
  SUBCASE("paper-scale batch") {
    CHECK(dca::enumerate_batch_all(testing::pk_labels(32, 4)).triplets.size() == 47616);
    CHECK(dca::batch_all_count(32, 4) == 47616);
  }
  SUBCASE("per-anchor count is (K-1)(PK-K) and order is lexicographic") {
    const std::size_t p = 3, k = 4;
    const auto set = dca::enumerate_batch_all(testing::pk_labels(p, k));
    std::map<std::size_t, std::size_t> per_anchor;
    for (const auto& t : set.triplets) ++per_anchor[t.anchor];
    for (const auto& [a, c] : per_anchor) CHECK(c == (k - 1) * (p * k - k));
    CHECK(std::is_sorted(set.triplets.begin(), set.triplets.end()));
  }
  SUBCASE("pk_shape") {
    const auto shape = dca::pk_shape(testing::pk_labels(5, 3));
    REQUIRE(shape.has_value());
    CHECK(shape->identities == 5);
    CHECK(shape->samples == 3);
    CHECK_FALSE(dca::pk_shape(std::vector<Label>{0, 0, 1}).has_value());
  }
}
