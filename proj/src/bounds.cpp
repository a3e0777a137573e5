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

#include "ctxbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxbound {

namespace {

MatchConfig match_config(const SearchConfig& cfg) {
  MatchConfig m;
  m.iou_threshold = cfg.iou_threshold;
  return m;
}

BoundResult make_result(const CategoryData& data, const Relation& rel, double bound,
                        double baseline) {
  BoundResult r;
  r.category = data.category();
  r.relation = rel;
  r.relation_name = data.name(rel);
  r.ap_bound = bound;
  r.baseline_bound = baseline;
  r.improvement = bound - baseline;
  r.degraded_bins = data.degraded();
  return r;
}

void sort_results(std::vector<BoundResult>& results) {
  std::stable_sort(results.begin(), results.end(),
                   [](const BoundResult& a, const BoundResult& b) {
                     if (a.ap_bound != b.ap_bound) return a.ap_bound > b.ap_bound;
                     return a.relation_name < b.relation_name;
                   });
}

}  // namespace

std::string_view to_string(CategoryStatus status) {
  switch (status) {
    case CategoryStatus::Ok:
      return "ok";
    case CategoryStatus::NoGroundTruth:
      return "no_ground_truth";
    case CategoryStatus::NoMatchedDetections:
      return "no_matched_detections";
  }
  return "unknown";
}

CategoryData::CategoryData(const DatasetBundle& bundle, const BundleIndex& index,
                           CategoryId category, const SearchConfig& cfg)
    : category_(category),
      cfg_(cfg),
      positives_(static_cast<std::int64_t>(index.objects_of(category).size())),
      detections_(match_category(bundle, index, category, match_config(cfg))),
      categories_(bundle.categories),
      context_(detections_, bundle, index, cfg.frame) {
  samples_.reserve(detections_.size());
  for (const auto& d : detections_) {
    samples_.push_back({d.detection.confidence, d.is_true()});
    if (d.is_true()) ++true_count_;
  }
  if (positives_ == 0) {
    status_ = CategoryStatus::NoGroundTruth;
  } else if (true_count_ == 0) {
    status_ = CategoryStatus::NoMatchedDetections;
  } else {
    bins_ = discretize_confidence(samples_, cfg.confidence_bins);
    bin_of_.reserve(samples_.size());
    for (const auto& s : samples_) bin_of_.push_back(bins_->bin_of(s.confidence));
  }
}

const AxisBins& CategoryData::confidence_bins() const {
  if (!bins_) throw NoMatchedDetections();
  return *bins_;
}

bool CategoryData::degraded() const { return bins_ && bins_->degraded(); }

BinGrid CategoryData::grid_for(const Relation& rel) const {
  const AxisBins& conf = confidence_bins();
  const std::size_t m = conf.size();
  std::vector<BinCounts> total(m);
  std::vector<BinCounts> with_context(m);
  for (std::size_t p = 0; p < samples_.size(); ++p) {
    if (bin_of_[p] < 0) continue;
    (samples_[p].is_true ? total[bin_of_[p]].t : total[bin_of_[p]].f) += 1;
  }
  for (std::uint32_t p : context_.positions(rel)) {
    if (bin_of_[p] < 0) continue;
    (samples_[p].is_true ? with_context[bin_of_[p]].t : with_context[bin_of_[p]].f) += 1;
  }

  BinGrid grid;
  grid.confidence_thresholds = conf.thresholds;
  grid.mode = ContextMode::binary();
  grid.positives = positives_;
  grid.requested_confidence_bins = cfg_.confidence_bins;
  for (std::size_t b = 0; b < m; ++b) {
    const BinCounts slots[2] = {with_context[b],
                                {total[b].t - with_context[b].t, total[b].f - with_context[b].f}};
    for (std::size_t s = 0; s < 2; ++s) {
      if (slots[s].t == 0 && slots[s].f == 0) continue;
      grid.bins.push_back({slots[s].t, slots[s].f, grid.bins.size(), b, s});
    }
  }
  return grid;
}

std::string CategoryData::name(const Relation& rel) const {
  return to_string(rel, categories_);
}

double bound_for_relation(const CategoryData& data, const Relation& rel) {
  return ap_general(heuristic_rank(data.grid_for(rel)));
}

double baseline_bound(const CategoryData& data) {
  return bound_for_relation(data, ConstantRelation{false});
}

namespace {

std::vector<BoundResult> atom_results(const CategoryData& data, double baseline) {
  std::vector<BoundResult> out;
  for (const Relation& rel : enumerate_atomic_relations(data.categories(), data.config().frame)) {
    out.push_back(make_result(data, rel, bound_for_relation(data, rel), baseline));
  }
  sort_results(out);
  return out;
}

std::vector<Relation> relations_of(std::span<const BoundResult> results) {
  std::vector<Relation> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(r.relation);
  return out;
}

}  // namespace

std::vector<BoundResult> best_relation_search(const CategoryData& data) {
  const double baseline = baseline_bound(data);
  std::vector<BoundResult> results = atom_results(data, baseline);
  const std::vector<Relation> ranked_atoms = relations_of(results);
  for (const Relation& rel : compose_pairs(ranked_atoms, data.config().top_k)) {
    results.push_back(make_result(data, rel, bound_for_relation(data, rel), baseline));
  }
  sort_results(results);
  return results;
}

std::vector<Relation> search_space(const CategoryData& data) {
  const double baseline = baseline_bound(data);
  std::vector<Relation> out = relations_of(atom_results(data, baseline));
  std::vector<Relation> composites = compose_pairs(out, data.config().top_k);
  out.insert(out.end(), composites.begin(), composites.end());
  return out;
}

RandomBaseline random_baseline(const CategoryData& data) {
  if (data.config().random_trials == 0) {
    throw std::invalid_argument("random_trials must be at least 1");
  }
  const double baseline = baseline_bound(data);
  RandomBaseline out;
  const std::uint64_t base = data.config().random_seed_base;
  for (std::uint64_t k = 1; k <= data.config().random_trials; ++k) {
    out.trial_improvements.push_back(bound_for_relation(data, RandomRelation{base + k}) -
                                     baseline);
  }
  const double n = static_cast<double>(out.trial_improvements.size());
  out.mean = std::accumulate(out.trial_improvements.begin(), out.trial_improvements.end(), 0.0) / n;
  if (out.trial_improvements.size() > 1) {
    double ss = 0.0;
    for (double v : out.trial_improvements) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

CategoryBounds analyze_category(const DatasetBundle& bundle, const BundleIndex& index,
                                CategoryId category, const SearchConfig& cfg) {
  CategoryData data(bundle, index, category, cfg);
  CategoryBounds out;
  out.category = category;
  out.name = bundle.category_name(category);
  out.status = data.status();
  out.positives = data.positives();
  out.true_count = data.true_count();
  out.detections = data.detections().size();
  if (!data.analyzable()) return out;
  out.ranking = best_relation_search(data);
  out.random = random_baseline(data);
  return out;
}

std::vector<SweepResult> iou_sweep(const DatasetBundle& bundle, const SearchConfig& cfg,
                                   std::span<const double> thresholds) {
  const BundleIndex index(bundle);
  std::vector<SweepResult> out;
  for (double threshold : thresholds) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
      throw std::invalid_argument("IoU thresholds must lie in (0, 1]");
    }
    SearchConfig local = cfg;
    local.iou_threshold = threshold;
    SweepResult sweep;
    sweep.iou_threshold = threshold;
    for (const auto& c : bundle.categories) {
      sweep.categories.push_back(analyze_category(bundle, index, c.id, local));
    }
    out.push_back(std::move(sweep));
  }
  return out;
}

}  // namespace ctxbound
