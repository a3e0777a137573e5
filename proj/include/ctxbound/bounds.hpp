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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxbound/ap.hpp"
#include "ctxbound/dataset.hpp"
#include "ctxbound/geometry.hpp"
#include "ctxbound/relation.hpp"

namespace ctxbound {

struct SearchConfig {
  std::size_t confidence_bins = 10;
  double iou_threshold = 0.5;
  // Atoms entering the and/or composition phase.
  std::size_t top_k = 50;
  std::size_t random_trials = 10;
  // Random trials use seeds random_seed_base + 1 .. random_seed_base + random_trials.
  std::uint64_t random_seed_base = 0;
  SpatialFrameConfig frame;
};

enum class CategoryStatus { Ok, NoGroundTruth, NoMatchedDetections };
std::string_view to_string(CategoryStatus status);

// Matched detections of one category plus everything the analyses reuse:
// confidence bins and the precomputed relation table.
class CategoryData {
 public:
  CategoryData(const DatasetBundle& bundle, const BundleIndex& index, CategoryId category,
               const SearchConfig& cfg);

  CategoryId category() const { return category_; }
  CategoryStatus status() const { return status_; }
  bool analyzable() const { return status_ == CategoryStatus::Ok; }
  std::int64_t positives() const { return positives_; }
  std::size_t true_count() const { return true_count_; }
  const SearchConfig& config() const { return cfg_; }

  std::span<const EvaluatedDetection> detections() const { return detections_; }
  std::span<const LabeledScore> samples() const { return samples_; }
  std::span<const Category> categories() const { return categories_; }
  const ContextTable& context() const { return context_; }

  // Throws NoMatchedDetections unless analyzable().
  const AxisBins& confidence_bins() const;
  bool degraded() const;

  // Binary-context grid for `rel`; same bins as build_bins over the
  // relation's context values.
  BinGrid grid_for(const Relation& rel) const;
  std::string name(const Relation& rel) const;

 private:
  CategoryId category_;
  SearchConfig cfg_;
  CategoryStatus status_ = CategoryStatus::Ok;
  std::int64_t positives_ = 0;
  std::size_t true_count_ = 0;
  std::vector<EvaluatedDetection> detections_;
  std::vector<LabeledScore> samples_;
  std::vector<Category> categories_;
  ContextTable context_;
  std::optional<AxisBins> bins_;
  std::vector<int> bin_of_;
};

struct BoundResult {
  CategoryId category = 0;
  Relation relation;
  std::string relation_name;
  double ap_bound = 0.0;
  double baseline_bound = 0.0;
  double improvement = 0.0;
  bool degraded_bins = false;
};

// AP upper bound (percent) when re-ranking the category's bins by t/f under
// the relation's binary context.
double bound_for_relation(const CategoryData& data, const Relation& rel);
double baseline_bound(const CategoryData& data);

// Atoms first, then and/or pairs of the top_k atoms by bound; everything
// returned sorted by bound (descending), ties by canonical name.
std::vector<BoundResult> best_relation_search(const CategoryData& data);

// Atoms plus the composites the search would build from them.
std::vector<Relation> search_space(const CategoryData& data);

struct RandomBaseline {
  std::vector<double> trial_improvements;
  double mean = 0.0;
  // Sample standard deviation; 0 for a single trial.
  double stddev = 0.0;
};

// Improvement of Random(seed) over the baseline for seeds 1..random_trials.
RandomBaseline random_baseline(const CategoryData& data);

struct CategoryBounds {
  CategoryId category = 0;
  std::string name;
  CategoryStatus status = CategoryStatus::Ok;
  std::int64_t positives = 0;
  std::size_t true_count = 0;
  std::size_t detections = 0;
  std::vector<BoundResult> ranking;
  RandomBaseline random;

  const BoundResult* best() const { return ranking.empty() ? nullptr : &ranking.front(); }
};

CategoryBounds analyze_category(const DatasetBundle& bundle, const BundleIndex& index,
                                CategoryId category, const SearchConfig& cfg);

struct SweepResult {
  double iou_threshold = 0.5;
  std::vector<CategoryBounds> categories;
};

// Full pipeline, re-matching included, per IoU threshold. Categories follow
// the bundle's declaration order; failures are recorded per category.
std::vector<SweepResult> iou_sweep(const DatasetBundle& bundle, const SearchConfig& cfg,
                                   std::span<const double> thresholds);

}  // namespace ctxbound
