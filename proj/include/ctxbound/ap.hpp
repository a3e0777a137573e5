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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ctxbound/relation.hpp"

namespace ctxbound {

// A detection reduced to what AP needs.
struct LabeledScore {
  double confidence = 0.0;
  bool is_true = false;
};

struct BinCounts {
  std::int64_t t = 0;
  std::int64_t f = 0;

  friend bool operator==(const BinCounts&, const BinCounts&) = default;
};

class NoMatchedDetections : public std::runtime_error {
 public:
  NoMatchedDetections() : std::runtime_error("category has no matched detections") {}
};

class UnequalBins : public std::invalid_argument {
 public:
  UnequalBins()
      : std::invalid_argument("bins hold different true counts; use ap_general") {}
};

class OracleTooLarge : public std::invalid_argument {
 public:
  OracleTooLarge() : std::invalid_argument("oracle limited to 10 bins") {}
};

inline constexpr std::size_t kMaxOracleBins = 10;

// Equal-positive discretization of one axis. Bin j covers values in
// [thresholds[j], thresholds[j-1]) (the first bin is unbounded above); values
// below the last threshold fall outside every bin. Each threshold is the value
// of a true sample, so tied values never straddle two bins.
struct AxisBins {
  std::vector<double> thresholds;
  std::vector<std::int64_t> true_counts;
  std::size_t requested = 0;

  std::size_t size() const { return thresholds.size(); }
  bool degraded() const { return size() < requested; }
  // Bin of a value, or -1 when below the covered range.
  int bin_of(double value) const;
};

// Splits the true samples into `bins` groups of floor/ceil-equal size; the
// larger groups sit at the top. Throws NoMatchedDetections without a true
// sample.
AxisBins discretize_confidence(std::span<const LabeledScore> samples, std::size_t bins);

struct ContextMode {
  enum class Kind { Binary, Real };
  Kind kind = Kind::Binary;
  // Context bins per confidence bin in Real mode.
  std::size_t m2 = 2;

  static ContextMode binary() { return {}; }
  static ContextMode real(std::size_t m2) { return {Kind::Real, m2}; }
};

struct Bin {
  std::int64_t t = 0;
  std::int64_t f = 0;
  std::size_t index = 0;
  std::size_t confidence_bin = 0;
  // Slot 0 holds the highest context values (context 1 in binary mode).
  std::size_t context_slot = 0;
};

struct BinGrid {
  std::vector<double> confidence_thresholds;
  ContextMode mode;
  std::vector<Bin> bins;
  std::int64_t positives = 0;
  std::size_t requested_confidence_bins = 0;

  bool degraded() const { return confidence_thresholds.size() < requested_confidence_bins; }
  std::vector<BinCounts> counts() const;
};

// Bins are emitted confidence bin first (descending), then context slot; empty
// bins are dropped and the survivors indexed 0..n-1.
BinGrid build_bins(std::span<const LabeledScore> samples,
                   std::span<const ContextValue> context, std::size_t m1,
                   ContextMode mode, std::int64_t positives);

// A grid given directly by per-bin counts, in index order.
BinGrid grid_from_counts(std::span<const BinCounts> counts, std::int64_t positives);

struct RankedBinSequence {
  std::vector<std::size_t> ordering;
  // Heuristic score t/f per bin (by bin index); +inf when f == 0.
  std::vector<double> scores;
  // Per ranked position.
  std::vector<BinCounts> counts;
  std::vector<double> recall;
  std::vector<double> precision;
  std::vector<double> delta_recall;
  std::int64_t positives = 0;
};

RankedBinSequence rank_bins(const BinGrid& grid, std::vector<std::size_t> ordering);
// Bins by decreasing t/f. f == 0 bins come first, by decreasing t; remaining
// ties go to the lower bin index.
RankedBinSequence heuristic_rank(const BinGrid& grid);
// Bins in index order, i.e. by decreasing confidence.
RankedBinSequence confidence_order(const BinGrid& grid);

// AP (percent) as a Riemann sum of precision over the recall increments of
// the ranked bins. Zero-t bins add nothing but raise later denominators.
double ap_general(std::span<const BinCounts> ranked, std::int64_t positives);
double ap_general(const RankedBinSequence& ranked);

// AP (percent) for ranked bins that all hold the same t: the mean precision
// over the POS/t recall levels, unreachable levels counting as zero. Throws
// UnequalBins otherwise.
double ap_equal_bins(const RankedBinSequence& ranked);

// Per-detection AP (percent): decreasing confidence, ties in input order,
// one recall step per true detection.
double ap_naive(std::span<const LabeledScore> samples, std::int64_t positives);

// Sign of AP(a) - AP(b) in exact rational arithmetic; orderings index grid bins.
int compare_ap_exact(const BinGrid& grid, std::span<const std::size_t> a,
                     std::span<const std::size_t> b);

struct OracleResult {
  std::vector<std::size_t> ordering;
  double ap = 0.0;
  // Distinct count sequences evaluated (permutations of identical bins are
  // evaluated once).
  std::size_t sequences = 0;
};

// Exhaustive maximization of ap_general over bin orderings. Among maximal
// orderings (compared exactly) the lexicographically smallest is returned.
OracleResult permutation_oracle(const BinGrid& grid);

}  // namespace ctxbound
