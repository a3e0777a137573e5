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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ctxbound/dataset.hpp"

namespace ctxbound {

// Kinds of false detection. Localization: the most-overlapping object has the
// detection's label. ClassConfusion: it has another label. Background: nothing
// overlaps by more than the error floor.
enum class ErrorType { Localization, ClassConfusion, Background };

inline constexpr ErrorType kAllErrorTypes[] = {
    ErrorType::Background, ErrorType::ClassConfusion, ErrorType::Localization};

std::string_view to_string(ErrorType type);

struct MatchConfig {
  // IoU needed for a detection to claim a ground-truth object.
  double iou_threshold = 0.5;
  // Overlap above which an object counts as "overlapping" for error typing
  // and for the co-occurrence self-exclusion.
  static constexpr double kErrorOverlapFloor = 0.1;
};

struct EvaluatedDetection {
  // Position of the detection in DatasetBundle::detections.
  std::size_t index = 0;
  Detection detection;
  // Absent iff the detection is true.
  std::optional<ErrorType> error;
  std::optional<ObjectId> matched_object;
  double max_overlap = 0.0;
  std::optional<ObjectId> max_overlap_object;

  bool is_true() const { return !error.has_value(); }
};

double iou(const BoundingBox& a, const BoundingBox& b);

struct Overlap {
  double iou = 0.0;
  std::optional<ObjectId> object;
  std::optional<CategoryId> category;
};

// Most-overlapping object among `objects`; ties go to the smaller object id.
Overlap most_overlapping(const BoundingBox& box,
                         std::span<const GroundTruthObject* const> objects);

ErrorType classify_error(const BoundingBox& box, CategoryId label,
                         std::span<const GroundTruthObject* const> image_objects);

// Greedy matching of one category's detections (given as positions into
// bundle.detections). Detections are visited by decreasing confidence with
// ties in input order; each claims the unmatched same-image object of the
// same category with the highest IoU, provided IoU >= cfg.iou_threshold.
// Returns one EvaluatedDetection per input position, in input order.
std::vector<EvaluatedDetection> match_detections(
    const DatasetBundle& bundle, const BundleIndex& index,
    std::span<const std::size_t> detection_positions, CategoryId category,
    const MatchConfig& cfg);

// All detections of `category` in the bundle.
std::vector<EvaluatedDetection> match_category(const DatasetBundle& bundle,
                                               const BundleIndex& index,
                                               CategoryId category,
                                               const MatchConfig& cfg);

}  // namespace ctxbound
