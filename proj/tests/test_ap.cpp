// Copyright 2026 The ctxbound Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "ctxbound/ap.hpp"
#include "support/oracles.hpp"

using namespace ctxbound;
using ctxbound::testing::Rational;

namespace {

const std::vector<BinCounts> kCounterexample{{277, 16}, {371, 955}, {69, 178}};
constexpr std::int64_t kCounterexamplePos = 717;

double as_double(const Rational& r) { return static_cast<double>(r); }

std::vector<LabeledScore> labeled(std::initializer_list<std::pair<double, bool>> items) {
  std::vector<LabeledScore> out;
  for (const auto& [c, t] : items) out.push_back({c, t});
  return out;
}

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

}  // namespace

TEST_CASE("discretize_confidence") {
  SUBCASE("ten distinct positives into five bins") {
    std::vector<LabeledScore> s;
    for (int i = 0; i < 10; ++i) s.push_back({0.05 + 0.1 * i, true});
    const AxisBins bins = discretize_confidence(s, 5);
    CHECK(bins.size() == 5);
    CHECK(bins.true_counts == std::vector<std::int64_t>{2, 2, 2, 2, 2});
    CHECK_FALSE(bins.degraded());
  }
  SUBCASE("remainder goes to the top bins") {
    std::vector<LabeledScore> s;
    for (int i = 0; i < 11; ++i) s.push_back({static_cast<double>(i), true});
    const AxisBins bins = discretize_confidence(s, 5);
    CHECK(bins.true_counts == std::vector<std::int64_t>{3, 2, 2, 2, 2});
    CHECK(bins.thresholds.front() == 8.0);
  }
  SUBCASE("tied positives degrade") {
    const auto s = labeled({{0.7, true}, {0.7, true}, {0.7, true}, {0.2, false}});
    const AxisBins bins = discretize_confidence(s, 2);
    CHECK(bins.size() == 1);
    CHECK(bins.degraded());
  }
  SUBCASE("ties never straddle a threshold") {
    const auto s = labeled({{0.9, true}, {0.5, true}, {0.5, true}, {0.5, true}, {0.1, true}});
    const AxisBins bins = discretize_confidence(s, 5);
    CHECK(bins.thresholds == std::vector<double>{0.9, 0.5, 0.1});
    CHECK(bins.true_counts == std::vector<std::int64_t>{1, 3, 1});
    CHECK(bins.degraded());
  }
  SUBCASE("no positives") {
    const auto s = labeled({{0.9, false}});
    CHECK_THROWS_AS(discretize_confidence(s, 3), NoMatchedDetections);
    CHECK_THROWS_WITH(discretize_confidence(s, 3), "category has no matched detections");
  }
  SUBCASE("below the lowest positive is out of range") {
    const auto s = labeled({{0.9, true}, {0.4, true}, {0.1, false}});
    const AxisBins bins = discretize_confidence(s, 2);
    CHECK(bins.bin_of(0.95) == 0);
    CHECK(bins.bin_of(0.5) == 1);
    CHECK(bins.bin_of(0.1) == -1);
  }
}

TEST_CASE("build_bins") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<LabeledScore> samples;
  std::vector<ContextValue> ctx;
  for (int i = 0; i < 400; ++i) {
    samples.push_back({u(rng), u(rng) < 0.4});
    ctx.push_back(u(rng) < 0.5 ? 1.0 : 0.0);
  }
  std::int64_t pos = 0;
  for (const auto& s : samples) pos += s.is_true ? 1 : 0;

  const BinGrid binary = build_bins(samples, ctx, 10, ContextMode::binary(), pos);
  CHECK(binary.bins.size() <= 20);
  CHECK(binary.bins.size() > 10);

  const std::vector<ContextValue> zeros(samples.size(), 0.0);
  const BinGrid flat = build_bins(samples, zeros, 10, ContextMode::binary(), pos);
  REQUIRE(flat.bins.size() == 10);
  for (std::size_t i = 0; i < flat.bins.size(); ++i) {
    CHECK(flat.bins[i].confidence_bin == i);
    CHECK(flat.bins[i].t == pos / 10 + (i < static_cast<std::size_t>(pos % 10) ? 1 : 0));
  }

  // Total true count never exceeds POS.
  std::int64_t t = 0;
  for (const auto& b : binary.bins) t += b.t;
  CHECK(t == pos);
  CHECK(t <= binary.positives);
}

TEST_CASE("build_bins real context") {
  std::vector<LabeledScore> samples;
  std::vector<ContextValue> ctx;
  for (int i = 0; i < 8; ++i) {
    samples.push_back({1.0 - 0.1 * i, true});
    ctx.push_back(static_cast<double>((i * 5) % 8));
  }
  samples.push_back({0.95, false});
  ctx.push_back(-3.0);
  const BinGrid grid = build_bins(samples, ctx, 2, ContextMode::real(2), 8);
  REQUIRE(grid.bins.size() == 4);
  for (const auto& b : grid.bins) CHECK(b.t == 2);
  // The false detection has the lowest context in the top confidence bin.
  CHECK(grid.bins[1].f == 1);
  CHECK(grid.bins[1].confidence_bin == 0);
  CHECK(grid.bins[1].context_slot == 1);
}

TEST_CASE("heuristic_rank") {
  const BinGrid grid = grid_from_counts(kCounterexample, kCounterexamplePos);
  const RankedBinSequence r = heuristic_rank(grid);
  CHECK(r.ordering == std::vector<std::size_t>{0, 1, 2});
  CHECK(r.scores[0] == doctest::Approx(277.0 / 16.0));
  CHECK(r.scores[1] == doctest::Approx(0.3884).epsilon(1e-4));
  CHECK(r.scores[2] == doctest::Approx(0.3876).epsilon(1e-4));

  const std::vector<BinCounts> small{{1, 2}, {1, 0}, {1, 1}};
  CHECK(heuristic_rank(grid_from_counts(small, 3)).ordering == std::vector<std::size_t>{1, 2, 0});

  const std::vector<BinCounts> single{{4, 3}};
  CHECK(heuristic_rank(grid_from_counts(single, 9)).ordering == std::vector<std::size_t>{0});

  // f = 0 bins first, larger t first among them.
  const std::vector<BinCounts> infinite{{1, 0}, {5, 1}, {3, 0}};
  CHECK(heuristic_rank(grid_from_counts(infinite, 9)).ordering ==
        std::vector<std::size_t>{2, 0, 1});

  // Score ties keep index order.
  const std::vector<BinCounts> ties{{2, 4}, {1, 2}, {3, 6}};
  CHECK(heuristic_rank(grid_from_counts(ties, 9)).ordering == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("ranked sequence derived fields") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto counts = testing::random_grid(rng, 1 + trial % 9);
    const std::int64_t pos = testing::true_total(counts) + trial % 7;
    const RankedBinSequence r = heuristic_rank(grid_from_counts(counts, pos));
    double previous = 0.0;
    double widths = 0.0;
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
      CHECK(r.recall[i] >= previous);
      CHECK(r.delta_recall[i] >= 0.0);
      CHECK(r.precision[i] >= 0.0);
      CHECK(r.precision[i] <= 1.0);
      widths += r.delta_recall[i];
      previous = r.recall[i];
    }
    CHECK(widths == doctest::Approx(static_cast<double>(testing::true_total(counts)) / pos));
    const double ap = ap_general(r);
    CHECK(ap >= 0.0);
    CHECK(ap <= 100.0);
  }
}

TEST_CASE("ap_equal_bins") {
  const auto ranked = [](std::vector<BinCounts> counts, std::int64_t pos) {
    const BinGrid grid = grid_from_counts(counts, pos);
    return rank_bins(grid, identity(grid.bins.size()));
  };
  const auto oracle = [](std::vector<BinCounts> counts, std::int64_t pos) {
    return as_double(testing::ordered_bins_ap(counts, identity(counts.size()), pos));
  };

  CHECK(ap_equal_bins(ranked({{1, 0}, {1, 1}}, 2)) == doctest::Approx(250.0 / 3.0).epsilon(1e-12));
  CHECK(oracle({{1, 0}, {1, 1}}, 2) == doctest::Approx(83.3333).epsilon(1e-6));

  // The oracle pins this value: (1/3)(2/2 + 4/6 + 6/14).
  const double v = ap_equal_bins(ranked({{2, 0}, {2, 2}, {2, 6}}, 6));
  CHECK(v == doctest::Approx(oracle({{2, 0}, {2, 2}, {2, 6}}, 6)).epsilon(1e-12));
  CHECK(v == doctest::Approx(69.8413).epsilon(1e-6));

  CHECK(ap_equal_bins(ranked({{3, 0}, {3, 0}, {3, 0}}, 9)) == 100.0);
  // Missed objects cap the reachable recall.
  CHECK(ap_equal_bins(ranked({{3, 0}, {3, 0}}, 9)) == doctest::Approx(200.0 / 3.0));

  CHECK_THROWS_AS(ap_equal_bins(ranked({{1, 0}, {2, 0}}, 3)), UnequalBins);
}

TEST_CASE("ap_general") {
  const BinGrid grid = grid_from_counts(kCounterexample, kCounterexamplePos);
  const double heuristic = ap_general(rank_bins(grid, {0, 1, 2}));
  const double better = ap_general(rank_bins(grid, {0, 2, 1}));
  CHECK(heuristic == doctest::Approx(60.9).epsilon(0.05 / 60.9));
  CHECK(better == doctest::Approx(62.6).epsilon(0.05 / 62.6));
  CHECK(heuristic < better);

  const std::vector<BinCounts> perfect{{12, 0}};
  CHECK(ap_general(perfect, 12) == 100.0);

  // t = 0 bins add nothing but dilute later precision.
  const std::vector<BinCounts> diluted{{0, 5}, {2, 0}};
  CHECK(ap_general(diluted, 2) == doctest::Approx(100.0 * 2.0 / 7.0));
}

TEST_CASE("ap_general matches the exact sweep oracle") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 500; ++trial) {
    const auto counts = testing::random_grid(rng, 1 + trial % 10);
    const std::int64_t pos = testing::true_total(counts) + trial % 5;
    std::vector<std::size_t> order = identity(counts.size());
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<BinCounts> ordered;
    for (std::size_t i : order) ordered.push_back(counts[i]);
    CHECK(ap_general(ordered, pos) ==
          doctest::Approx(as_double(testing::ordered_bins_ap(counts, order, pos))).epsilon(1e-12));
  }
}

TEST_CASE("Riemann consistency on equal-t bins") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 500; ++trial) {
    const auto counts = testing::random_equal_t_grid(rng, 1 + trial % 8);
    const std::int64_t pos = testing::true_total(counts) + trial % 3;
    const BinGrid grid = grid_from_counts(counts, pos);
    for (const auto& r : {heuristic_rank(grid), confidence_order(grid)}) {
      CHECK(ap_general(r) == ap_equal_bins(r));
    }
  }
}

TEST_CASE("ap_naive") {
  CHECK(ap_naive(labeled({{0.9, true}, {0.5, false}}), 1) == 100.0);
  CHECK(ap_naive(labeled({{0.9, false}, {0.5, true}}), 1) == 50.0);
  const auto s = labeled({{0.9, true}, {0.8, true}, {0.7, false}, {0.6, true}});
  CHECK(ap_naive(s, 3) == doctest::Approx(100.0 * (1.0 + 1.0 + 0.75) / 3.0));
  CHECK(ap_naive(s, 3) == doctest::Approx(91.67).epsilon(1e-4));
  CHECK(ap_naive(s, 3) == doctest::Approx(as_double(testing::samples_ap(s, 3))).epsilon(1e-12));
}

TEST_CASE("bin AP with one positive per bin equals naive AP") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LabeledScore> s;
    const int n = 5 + trial % 60;
    for (int i = 0; i < n; ++i) s.push_back({u(rng), u(rng) < 0.5});
    s.push_back({u(rng), true});
    std::int64_t pos = 0;
    for (const auto& x : s) pos += x.is_true ? 1 : 0;
    const std::vector<ContextValue> zeros(s.size(), 0.0);
    const BinGrid grid = build_bins(s, zeros, static_cast<std::size_t>(pos), ContextMode::binary(), pos);
    const double bins = ap_equal_bins(confidence_order(grid));
    CHECK(std::abs(bins - ap_naive(s, pos)) <= 1e-9);
  }
}

TEST_CASE("permutation_oracle") {
  SUBCASE("counterexample") {
    const BinGrid grid = grid_from_counts(kCounterexample, kCounterexamplePos);
    const OracleResult r = permutation_oracle(grid);
    CHECK(r.ordering == std::vector<std::size_t>{0, 2, 1});
    CHECK(r.ap == doctest::Approx(62.6).epsilon(0.05 / 62.6));
    CHECK(r.sequences == 6);
    CHECK(compare_ap_exact(grid, r.ordering, heuristic_rank(grid).ordering) > 0);
  }
  SUBCASE("equal t orders by increasing f") {
    const std::vector<BinCounts> counts{{1, 3}, {1, 0}, {1, 1}};
    const BinGrid grid = grid_from_counts(counts, 3);
    const OracleResult r = permutation_oracle(grid);
    CHECK(r.ordering == std::vector<std::size_t>{1, 2, 0});
    CHECK(r.ap == ap_general(heuristic_rank(grid)));
  }
  SUBCASE("single bin") {
    const std::vector<BinCounts> counts{{4, 6}};
    const BinGrid grid = grid_from_counts(counts, 5);
    const OracleResult r = permutation_oracle(grid);
    CHECK(r.ordering == std::vector<std::size_t>{0});
    CHECK(r.ap == ap_general(counts, 5));
  }
  SUBCASE("limited to ten bins") {
    std::vector<BinCounts> counts(11, BinCounts{1, 1});
    CHECK_THROWS_AS(permutation_oracle(grid_from_counts(counts, 11)), OracleTooLarge);
    CHECK_THROWS_WITH(permutation_oracle(grid_from_counts(counts, 11)), "oracle limited to 10 bins");
    counts.pop_back();
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = {1, static_cast<std::int64_t>(i)};
    const OracleResult r = permutation_oracle(grid_from_counts(counts, 10));
    CHECK(r.sequences == 3628800);
  }
  SUBCASE("repeated bins are enumerated once") {
    const std::vector<BinCounts> counts{{2, 3}, {2, 3}, {2, 3}, {1, 0}};
    const OracleResult r = permutation_oracle(grid_from_counts(counts, 7));
    CHECK(r.sequences == 4);
    CHECK(r.ordering == std::vector<std::size_t>{3, 0, 1, 2});
  }
}

TEST_CASE("permutation_oracle agrees with brute force") {
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 6;
    auto counts = trial % 3 == 0 ? testing::random_equal_t_grid(rng, n) : testing::random_grid(rng, n);
    if (trial % 5 == 0 && n > 1) counts[1] = counts[0];
    const std::int64_t pos = testing::true_total(counts) + trial % 4;
    const BinGrid grid = grid_from_counts(counts, pos);
    const OracleResult r = permutation_oracle(grid);
    const auto brute = testing::brute_force_best(counts, pos);
    CHECK(r.ordering == brute.ordering);
    CHECK(testing::ordered_bins_ap(counts, r.ordering, pos) == brute.ap);
    CHECK(r.ap == doctest::Approx(as_double(brute.ap)).epsilon(1e-12));
  }
}

TEST_CASE("compare_ap_exact agrees with rationals") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const auto counts = testing::random_grid(rng, n);
    const std::int64_t pos = testing::true_total(counts);
    const BinGrid grid = grid_from_counts(counts, pos);
    std::vector<std::size_t> a = identity(n);
    std::vector<std::size_t> b = identity(n);
    std::shuffle(a.begin(), a.end(), rng);
    if (trial % 2) std::shuffle(b.begin(), b.end(), rng);
    const Rational ra = testing::ordered_bins_ap(counts, a, pos);
    const Rational rb = testing::ordered_bins_ap(counts, b, pos);
    const int expected = ra < rb ? -1 : (ra > rb ? 1 : 0);
    CHECK(compare_ap_exact(grid, a, b) == expected);
  }
}

TEST_CASE("oracle dominance and equal-t optimality") {
  std::mt19937_64 rng(88);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const bool equal_t = trial % 2 == 0;
    const auto counts = equal_t ? testing::random_equal_t_grid(rng, n) : testing::random_grid(rng, n);
    const std::int64_t pos = testing::true_total(counts);
    const BinGrid grid = grid_from_counts(counts, pos);
    const RankedBinSequence h = heuristic_rank(grid);
    const OracleResult r = permutation_oracle(grid);
    const int cmp = compare_ap_exact(grid, r.ordering, h.ordering);
    CHECK(cmp >= 0);
    if (equal_t) CHECK(cmp == 0);
  }
}
