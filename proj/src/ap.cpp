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

#include "ctxbound/ap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/multiprecision/cpp_int.hpp>

namespace ctxbound {

namespace {

using Rational = boost::multiprecision::cpp_rational;

// AP * POS as an exact fraction: sum of t_i * T_i / (T_i + F_i).
Rational exact_weighted_precision(std::span<const BinCounts> ranked) {
  Rational sum = 0;
  std::int64_t cum_t = 0;
  std::int64_t cum_f = 0;
  for (const auto& b : ranked) {
    cum_t += b.t;
    cum_f += b.f;
    if (b.t > 0) sum += Rational(b.t) * Rational(cum_t, cum_t + cum_f);
  }
  return sum;
}

std::vector<BinCounts> ordered_counts(const BinGrid& grid,
                                      std::span<const std::size_t> ordering) {
  std::vector<BinCounts> out;
  out.reserve(ordering.size());
  for (std::size_t i : ordering) out.push_back({grid.bins.at(i).t, grid.bins.at(i).f});
  return out;
}

__extension__ using Wide = __int128;

// True iff bin a ranks before bin b under the t/f heuristic.
bool ranks_before(const Bin& a, const Bin& b) {
  if (a.f == 0 || b.f == 0) {
    if (a.f != 0) return false;
    if (b.f != 0) return true;
    if (a.t != b.t) return a.t > b.t;
    return a.index < b.index;
  }
  const Wide lhs = static_cast<Wide>(a.t) * b.f;
  const Wide rhs = static_cast<Wide>(b.t) * a.f;
  if (lhs != rhs) return lhs > rhs;
  return a.index < b.index;
}

}  // namespace

int AxisBins::bin_of(double value) const {
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    if (value >= thresholds[j]) return static_cast<int>(j);
  }
  return -1;
}

AxisBins discretize_confidence(std::span<const LabeledScore> samples, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("bin count must be at least 1");
  std::vector<double> positives;
  for (const auto& s : samples) {
    if (s.is_true) positives.push_back(s.confidence);
  }
  if (positives.empty()) throw NoMatchedDetections();
  std::sort(positives.begin(), positives.end(), std::greater<>());

  const std::size_t total = positives.size();
  const std::size_t used = std::min(bins, total);
  const std::size_t base = total / used;
  const std::size_t extra = total % used;

  AxisBins out;
  out.requested = bins;
  std::size_t cumulative = 0;
  for (std::size_t j = 0; j < used; ++j) {
    cumulative += base + (j < extra ? 1 : 0);
    const double threshold = positives[cumulative - 1];
    if (!out.thresholds.empty() && out.thresholds.back() == threshold) continue;
    out.thresholds.push_back(threshold);
  }
  out.true_counts.assign(out.thresholds.size(), 0);
  for (double v : positives) ++out.true_counts[static_cast<std::size_t>(out.bin_of(v))];
  return out;
}

std::vector<BinCounts> BinGrid::counts() const {
  std::vector<BinCounts> out;
  out.reserve(bins.size());
  for (const auto& b : bins) out.push_back({b.t, b.f});
  return out;
}

BinGrid build_bins(std::span<const LabeledScore> samples,
                   std::span<const ContextValue> context, std::size_t m1,
                   ContextMode mode, std::int64_t positives) {
  if (context.size() != samples.size()) {
    throw std::invalid_argument("context values must match the samples");
  }
  const AxisBins conf = discretize_confidence(samples, m1);
  const std::size_t slots = mode.kind == ContextMode::Kind::Binary ? 2 : mode.m2;
  if (slots == 0) throw std::invalid_argument("context bin count must be at least 1");

  std::vector<int> conf_bin(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    conf_bin[i] = conf.bin_of(samples[i].confidence);
  }

  std::vector<std::size_t> slot(samples.size(), 0);
  if (mode.kind == ContextMode::Kind::Binary) {
    for (std::size_t i = 0; i < samples.size(); ++i) slot[i] = context[i] > 0.5 ? 0 : 1;
  } else {
    // Equal-positive split of the context axis inside every confidence bin.
    for (std::size_t b = 0; b < conf.size(); ++b) {
      std::vector<LabeledScore> members;
      std::vector<std::size_t> member_index;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (conf_bin[i] != static_cast<int>(b)) continue;
        members.push_back({context[i], samples[i].is_true});
        member_index.push_back(i);
      }
      const AxisBins ctx = discretize_confidence(members, slots);
      for (std::size_t k = 0; k < members.size(); ++k) {
        const int s = ctx.bin_of(members[k].confidence);
        slot[member_index[k]] = s < 0 ? ctx.size() - 1 : static_cast<std::size_t>(s);
      }
    }
  }

  std::vector<BinCounts> cells(conf.size() * slots);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (conf_bin[i] < 0) continue;
    BinCounts& c = cells[static_cast<std::size_t>(conf_bin[i]) * slots + slot[i]];
    (samples[i].is_true ? c.t : c.f) += 1;
  }

  BinGrid grid;
  grid.confidence_thresholds = conf.thresholds;
  grid.mode = mode;
  grid.positives = positives;
  grid.requested_confidence_bins = m1;
  for (std::size_t b = 0; b < conf.size(); ++b) {
    for (std::size_t s = 0; s < slots; ++s) {
      const BinCounts& c = cells[b * slots + s];
      if (c.t == 0 && c.f == 0) continue;
      grid.bins.push_back({c.t, c.f, grid.bins.size(), b, s});
    }
  }
  return grid;
}

BinGrid grid_from_counts(std::span<const BinCounts> counts, std::int64_t positives) {
  BinGrid grid;
  grid.positives = positives;
  for (const auto& c : counts) {
    if (c.t < 0 || c.f < 0) throw std::invalid_argument("bin counts must be non-negative");
    if (c.t == 0 && c.f == 0) continue;
    grid.bins.push_back({c.t, c.f, grid.bins.size(), grid.bins.size(), 0});
  }
  grid.requested_confidence_bins = grid.bins.size();
  grid.confidence_thresholds.assign(grid.bins.size(), 0.0);
  return grid;
}

RankedBinSequence rank_bins(const BinGrid& grid, std::vector<std::size_t> ordering) {
  RankedBinSequence r;
  r.positives = grid.positives;
  r.scores.reserve(grid.bins.size());
  for (const auto& b : grid.bins) {
    r.scores.push_back(b.f == 0 ? std::numeric_limits<double>::infinity()
                                : static_cast<double>(b.t) / static_cast<double>(b.f));
  }
  r.counts = ordered_counts(grid, ordering);
  r.ordering = std::move(ordering);
  std::int64_t cum_t = 0;
  std::int64_t cum_f = 0;
  double previous = 0.0;
  for (const auto& c : r.counts) {
    cum_t += c.t;
    cum_f += c.f;
    const double recall =
        grid.positives > 0 ? static_cast<double>(cum_t) / static_cast<double>(grid.positives)
                           : 0.0;
    r.recall.push_back(recall);
    r.precision.push_back(cum_t + cum_f > 0 ? static_cast<double>(cum_t) /
                                                  static_cast<double>(cum_t + cum_f)
                                            : 0.0);
    r.delta_recall.push_back(recall - previous);
    previous = recall;
  }
  return r;
}

RankedBinSequence heuristic_rank(const BinGrid& grid) {
  std::vector<std::size_t> order(grid.bins.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranks_before(grid.bins[a], grid.bins[b]);
  });
  return rank_bins(grid, std::move(order));
}

RankedBinSequence confidence_order(const BinGrid& grid) {
  std::vector<std::size_t> order(grid.bins.size());
  std::iota(order.begin(), order.end(), 0);
  return rank_bins(grid, std::move(order));
}

double ap_general(std::span<const BinCounts> ranked, std::int64_t positives) {
  if (positives <= 0) throw std::invalid_argument("POS must be positive");
  const double pos = static_cast<double>(positives);
  std::int64_t cum_t = 0;
  std::int64_t cum_f = 0;
  double sum = 0.0;
  for (const auto& b : ranked) {
    cum_t += b.t;
    cum_f += b.f;
    if (b.t == 0) continue;
    const double precision = static_cast<double>(cum_t) / static_cast<double>(cum_t + cum_f);
    sum += precision * (static_cast<double>(b.t) / pos);
  }
  return 100.0 * sum;
}

double ap_general(const RankedBinSequence& ranked) {
  return ap_general(ranked.counts, ranked.positives);
}

double ap_equal_bins(const RankedBinSequence& ranked) {
  if (ranked.positives <= 0) throw std::invalid_argument("POS must be positive");
  if (ranked.counts.empty()) return 0.0;
  const std::int64_t t = ranked.counts.front().t;
  if (t <= 0) throw UnequalBins();
  for (const auto& c : ranked.counts) {
    if (c.t != t) throw UnequalBins();
  }
  // Recall levels are spaced t/POS apart; each ranked bin reaches level i.
  const double width = static_cast<double>(t) / static_cast<double>(ranked.positives);
  std::int64_t false_so_far = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < ranked.counts.size(); ++i) {
    const std::int64_t it = static_cast<std::int64_t>(i + 1) * t;
    false_so_far += ranked.counts[i].f;
    sum += static_cast<double>(it) / static_cast<double>(it + false_so_far) * width;
  }
  return 100.0 * sum;
}

double ap_naive(std::span<const LabeledScore> samples, std::int64_t positives) {
  if (positives <= 0) throw std::invalid_argument("POS must be positive");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].confidence > samples[b].confidence;
  });
  const double step = 1.0 / static_cast<double>(positives);
  std::int64_t seen = 0;
  std::int64_t hits = 0;
  double sum = 0.0;
  for (std::size_t i : order) {
    ++seen;
    if (!samples[i].is_true) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(seen) * step;
  }
  return 100.0 * sum;
}

int compare_ap_exact(const BinGrid& grid, std::span<const std::size_t> a,
                     std::span<const std::size_t> b) {
  const Rational lhs = exact_weighted_precision(ordered_counts(grid, a));
  const Rational rhs = exact_weighted_precision(ordered_counts(grid, b));
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

OracleResult permutation_oracle(const BinGrid& grid) {
  const std::size_t n = grid.bins.size();
  if (n > kMaxOracleBins) throw OracleTooLarge();
  if (grid.positives <= 0) throw std::invalid_argument("POS must be positive");

  // Identical (t, f) bins are interchangeable: enumerate distinct count
  // sequences and map each back to the smallest bin ordering producing it.
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> type_of;
  std::vector<BinCounts> type_counts;
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> sequence;
  for (const auto& b : grid.bins) {
    auto [it, inserted] = type_of.try_emplace({b.t, b.f}, type_counts.size());
    if (inserted) {
      type_counts.push_back({b.t, b.f});
      members.emplace_back();
    }
    members[it->second].push_back(b.index);
    sequence.push_back(it->second);
  }
  std::sort(sequence.begin(), sequence.end());

  auto ordering_for = [&](const std::vector<std::size_t>& seq) {
    std::vector<std::size_t> next(members.size(), 0);
    std::vector<std::size_t> out;
    out.reserve(seq.size());
    for (std::size_t type : seq) out.push_back(members[type][next[type]++]);
    return out;
  };

  OracleResult best;
  Rational best_exact = -1;
  double best_value = -1.0;
  std::vector<BinCounts> ranked(n);
  // Doubles prune; anything within this margin of the best is settled exactly.
  constexpr double kMargin = 1e-9;
  do {
    ++best.sequences;
    for (std::size_t i = 0; i < n; ++i) ranked[i] = type_counts[sequence[i]];
    const double value = n == 0 ? 0.0 : ap_general(ranked, grid.positives);
    if (value < best_value - kMargin) continue;
    const Rational exact = exact_weighted_precision(ranked);
    std::vector<std::size_t> ordering = ordering_for(sequence);
    if (exact > best_exact || (exact == best_exact && ordering < best.ordering)) {
      best_exact = exact;
      best.ordering = std::move(ordering);
      best.ap = value;
    }
    best_value = std::max(best_value, value);
  } while (std::next_permutation(sequence.begin(), sequence.end()));
  return best;
}

}  // namespace ctxbound
