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

#include "ctxbound/capacity.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>

namespace ctxbound {

namespace {

std::vector<std::size_t> most_confident(std::span<const EvaluatedDetection> dets,
                                        auto&& keep) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (keep(dets[i])) out.push_back(i);
  }
  std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].detection.confidence > dets[b].detection.confidence;
  });
  return out;
}

}  // namespace

BalancedSet select_balanced(std::span<const EvaluatedDetection> dets, ErrorType error_type) {
  auto trues = most_confident(dets, [](const EvaluatedDetection& d) { return d.is_true(); });
  auto falses = most_confident(
      dets, [&](const EvaluatedDetection& d) { return d.error == error_type; });
  const std::size_t n = std::min(trues.size(), falses.size());
  if (n == 0) throw InsufficientSamples();
  BalancedSet out;
  out.n = n;
  out.positions.assign(trues.begin(), trues.begin() + static_cast<std::ptrdiff_t>(n));
  out.positions.insert(out.positions.end(), falses.begin(),
                       falses.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

double capacity_accuracy(std::span<const ContextValue> context, std::span<const bool> truth) {
  if (context.size() != truth.size() || context.empty()) {
    throw std::invalid_argument("capacity needs parallel, non-empty inputs");
  }
  std::map<ContextValue, std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t i = 0; i < context.size(); ++i) {
    auto& g = groups[context[i]];
    (truth[i] ? g.first : g.second) += 1;
  }
  std::size_t correct = 0;
  for (const auto& [value, counts] : groups) correct += std::max(counts.first, counts.second);
  return static_cast<double>(correct) / static_cast<double>(context.size());
}

double capacity(const Relation& rel, const CategoryData& data, const BalancedSet& balanced) {
  const std::vector<std::uint32_t> hits = data.context().positions(rel);
  std::vector<ContextValue> context;
  context.reserve(balanced.positions.size());
  for (std::size_t p : balanced.positions) {
    context.push_back(std::binary_search(hits.begin(), hits.end(), static_cast<std::uint32_t>(p))
                          ? 1.0
                          : 0.0);
  }
  // std::span<const bool> cannot view std::vector<bool>.
  auto truth = std::make_unique<bool[]>(balanced.positions.size());
  for (std::size_t i = 0; i < balanced.positions.size(); ++i) {
    truth[i] = data.detections()[balanced.positions[i]].is_true();
  }
  return capacity_accuracy(context, std::span<const bool>(truth.get(), balanced.positions.size()));
}

CapacityResult max_capacity(const CategoryData& data, std::span<const Relation> relations,
                            ErrorType error_type) {
  const BalancedSet balanced = select_balanced(data.detections(), error_type);
  CapacityResult best;
  best.category = data.category();
  best.error_type = error_type;
  best.n = balanced.n;
  best.accuracy = -1.0;
  for (const Relation& rel : relations) {
    const double acc = capacity(rel, data, balanced);
    std::string name = data.name(rel);
    if (acc > best.accuracy || (acc == best.accuracy && name < best.relation_name)) {
      best.accuracy = acc;
      best.relation = rel;
      best.relation_name = std::move(name);
    }
  }
  if (best.accuracy < 0.0) {
    throw std::invalid_argument("capacity needs at least one relation");
  }
  return best;
}

}  // namespace ctxbound
