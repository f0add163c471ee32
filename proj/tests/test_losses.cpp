#include <cmath>
#include <vector>

#include "dca/errors.hpp"
#include "dca/losses.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using dca::EmbeddingBatch;
using dca::LossConfig;
using dca::LossVariant;
using dca::Matrix;
using dca::Rng;

namespace {

const LossVariant kAll[] = {LossVariant::kTriBatchHard, LossVariant::kTriBatchAll,
                            LossVariant::kDcaBatchHard, LossVariant::kDcaBatchAll};

EmbeddingBatch line_batch(std::vector<double> xs) {
  const std::size_t n = xs.size();
  return {Matrix(n, 1, std::move(xs)), {0, 0, 1, 1}};
}

oracle::Loss oracle_loss(const EmbeddingBatch& b, const LossConfig& cfg) {
  const Matrix m = dca::uses_context(cfg.variant) ? oracle::dca(b.features, cfg.lambda)
                                                  : oracle::distances(b.features);
  return dca::is_batch_all(cfg.variant)
             ? oracle::batch_all(m, b.labels, cfg.margin, cfg.nonzero_average)
             : oracle::batch_hard(m, b.labels, cfg.margin, cfg.nonzero_average);
}

}  // namespace

TEST_CASE("hinge") {
  CHECK(dca::hinge(-1.0) == 0.0);
  CHECK(dca::hinge(0.0) == 0.0);
  CHECK(dca::hinge(2.5) == 2.5);
}

TEST_CASE("variant names round-trip and defaults follow the variant") {
  for (LossVariant v : kAll) CHECK(dca::parse_loss_variant(dca::to_string(v)) == v);
  CHECK_THROWS_AS(dca::parse_loss_variant("dca_xx"), dca::ConfigError);
  CHECK(LossConfig::defaults(LossVariant::kDcaBatchAll).nonzero_average);
  CHECK_FALSE(LossConfig::defaults(LossVariant::kTriBatchHard).nonzero_average);
  const LossConfig d = LossConfig::defaults(LossVariant::kDcaBatchHard);
  CHECK(d.margin == 1.2);
  CHECK(d.lambda == 0.5);
  CHECK_FALSE(d.detach_context);
}

TEST_CASE("loss_forward hand cases") {
  SUBCASE("well separated identities give zero loss") {
    const auto b = line_batch({0.0, 0.1, 5.0, 5.1});
    for (LossVariant v : kAll) {
      const auto out = dca::loss_forward(b, LossConfig::defaults(v));
      CHECK(out.value == 0.0);
      CHECK(out.active_count == 0);
    }
    const auto ba = dca::loss_forward(b, LossConfig::defaults(LossVariant::kTriBatchAll));
    CHECK(ba.total_count == 8);
    const auto dca_ba = dca::loss_forward(b, LossConfig::defaults(LossVariant::kDcaBatchAll));
    CHECK(dca_ba.total_count == 8);
  }
  SUBCASE("overlapping identities, batch-all") {
    // frozen from a 40-digit evaluation of the hinge averages
    const auto b = line_batch({0.0, 1.0, 1.5, 2.5});
    LossConfig cfg = LossConfig::defaults(LossVariant::kTriBatchAll);
    auto out = dca::loss_forward(b, cfg);
    CHECK(out.value == doctest::Approx(1.0333333333333333333).epsilon(1e-14));
    CHECK(out.active_count == 6);
    CHECK(out.total_count == 8);
    cfg.nonzero_average = false;
    CHECK(dca::loss_forward(b, cfg).value == doctest::Approx(0.775).epsilon(1e-14));

    cfg = LossConfig::defaults(LossVariant::kDcaBatchAll);
    out = dca::loss_forward(b, cfg);
    CHECK(out.value == doctest::Approx(1.0021067460513790535).epsilon(1e-13));
    cfg.nonzero_average = false;
    CHECK(dca::loss_forward(b, cfg).value == doctest::Approx(0.75158005953853429014).epsilon(1e-13));
  }
}

TEST_CASE("loss_forward matches the loop oracle on random batches") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = testing::random_pk_batch(2 + rng.below(3), 2 + rng.below(3), 1 + rng.below(4),
                                            rng, 0.5);
    for (LossVariant v : kAll) {
      LossConfig cfg = LossConfig::defaults(v);
      cfg.margin = rng.uniform(0.0, 2.0);
      cfg.lambda = rng.uniform();
      cfg.nonzero_average = rng.below(2) == 1;
      const auto got = dca::loss_forward(b, cfg);
      const auto want = oracle_loss(b, cfg);
      CHECK(std::abs(got.value - want.value) <= 1e-10);
      CHECK(got.active_count == want.active);
      CHECK(got.total_count == want.total);
    }
  }
}

TEST_CASE("loss properties") {
  Rng rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = 1 + rng.below(4);
    const auto b = testing::random_pk_batch(3, 3, dim, rng, 0.6);
    for (LossVariant v : kAll) {
      LossConfig cfg = LossConfig::defaults(v);
      const double base = dca::loss_forward(b, cfg).value;

      // translation, rotation, permutation
      std::vector<double> shift(dim);
      for (double& s : shift) s = 3.0 * rng.normal();
      CHECK(std::abs(dca::loss_forward({testing::translate(b.features, shift), b.labels}, cfg).value -
                     base) <= 1e-8);
      const auto q = testing::random_orthogonal(dim, rng);
      CHECK(std::abs(dca::loss_forward({testing::rotate(b.features, q), b.labels}, cfg).value -
                     base) <= 1e-8);
      const auto perm = testing::random_permutation(b.size(), rng);
      CHECK(dca::loss_forward(testing::permute(b, perm), cfg).value == base);

      // with plain averaging the value is non-decreasing in the margin
      LossConfig plain = cfg;
      plain.nonzero_average = false;
      const double plain_base = dca::loss_forward(b, plain).value;
      LossConfig wider = plain;
      wider.margin = plain.margin + 0.5;
      CHECK(dca::loss_forward(b, wider).value >= plain_base - 1e-15);
      LossConfig zero = plain;
      zero.margin = 0.0;
      CHECK(dca::loss_forward(b, zero).value <= plain_base + 1e-15);

      // averaging over active terms never lowers the value
      LossConfig nz = cfg, all = cfg;
      nz.nonzero_average = true;
      all.nonzero_average = false;
      CHECK(dca::loss_forward(b, nz).value >= dca::loss_forward(b, all).value);
    }
  }
}

TEST_CASE("DCA and plain variants coincide on a fully duplicated batch with lambda 0") {
  const EmbeddingBatch b{Matrix(6, 2, 1.25), testing::pk_labels(3, 2)};
  for (auto [tri, dcav] : {std::pair{LossVariant::kTriBatchHard, LossVariant::kDcaBatchHard},
                           std::pair{LossVariant::kTriBatchAll, LossVariant::kDcaBatchAll}}) {
    LossConfig a = LossConfig::defaults(tri);
    LossConfig c = LossConfig::defaults(dcav);
    c.lambda = 0.0;
    const auto x = dca::loss_forward(b, a);
    const auto y = dca::loss_forward(b, c);
    CHECK(x.value == y.value);
    CHECK(x.value == doctest::Approx(1.2));
    CHECK(x.active_count == y.active_count);
  }
}

TEST_CASE("loss_forward rejects invalid input") {
  const EmbeddingBatch single_id{Matrix(3, 1, {0.0, 1.0, 2.0}), {0, 0, 0}};
  CHECK_THROWS_AS(dca::loss_forward(single_id, LossConfig{}), dca::ValidationError);
  const EmbeddingBatch lonely{Matrix(3, 1, {0.0, 1.0, 2.0}), {0, 0, 1}};
  CHECK_THROWS_WITH_AS(dca::loss_forward(lonely, LossConfig{}),
                       doctest::Contains("identity 1 has a single sample"), dca::ValidationError);
  const EmbeddingBatch ok{Matrix(4, 1, {0.0, 1.0, 2.0, 3.0}), {0, 0, 1, 1}};
  LossConfig bad;
  bad.margin = -0.1;
  CHECK_THROWS_AS(dca::loss_forward(ok, bad), dca::ValidationError);
  bad = LossConfig{};
  bad.lambda = 2.0;
  CHECK_THROWS_AS(dca::loss_forward(ok, bad), dca::ValidationError);
}
