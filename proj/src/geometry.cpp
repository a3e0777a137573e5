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

#include "ctxbound/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace ctxbound {

std::string_view to_string(ErrorType type) {
  switch (type) {
    case ErrorType::Localization:
      return "localization";
    case ErrorType::ClassConfusion:
      return "class_confusion";
    case ErrorType::Background:
      return "background";
  }
  return "unknown";
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Overlap most_overlapping(const BoundingBox& box,
                         std::span<const GroundTruthObject* const> objects) {
  Overlap best;
  for (const GroundTruthObject* o : objects) {
    const double v = iou(box, o->box);
    if (!best.object || v > best.iou || (v == best.iou && o->id < *best.object)) {
      best.iou = v;
      best.object = o->id;
      best.category = o->category;
    }
  }
  return best;
}

ErrorType classify_error(const BoundingBox& box, CategoryId label,
                         std::span<const GroundTruthObject* const> image_objects) {
  const Overlap o = most_overlapping(box, image_objects);
  if (!o.object || o.iou <= MatchConfig::kErrorOverlapFloor) return ErrorType::Background;
  return *o.category == label ? ErrorType::Localization : ErrorType::ClassConfusion;
}

std::vector<EvaluatedDetection> match_detections(
    const DatasetBundle& bundle, const BundleIndex& index,
    std::span<const std::size_t> detection_positions, CategoryId category,
    const MatchConfig& cfg) {
  const std::size_t n = detection_positions.size();
  std::vector<EvaluatedDetection> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].index = detection_positions[i];
    out[i].detection = bundle.detections[detection_positions[i]];
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out[a].detection.confidence > out[b].detection.confidence;
  });

  std::unordered_map<ObjectId, bool> claimed;
  std::vector<const GroundTruthObject*> image_objects;
  for (std::size_t pos : order) {
    EvaluatedDetection& ev = out[pos];
    image_objects.clear();
    for (std::size_t oi : index.objects_in_image(ev.detection.image_id)) {
      image_objects.push_back(&bundle.objects[oi]);
    }

    const GroundTruthObject* best = nullptr;
    double best_iou = -1.0;
    for (const GroundTruthObject* o : image_objects) {
      if (o->category != category || claimed[o->id]) continue;
      const double v = iou(ev.detection.box, o->box);
      if (v > best_iou || (v == best_iou && best && o->id < best->id)) {
        best_iou = v;
        best = o;
      }
    }

    const Overlap overall = most_overlapping(ev.detection.box, image_objects);
    ev.max_overlap = overall.iou;
    ev.max_overlap_object = overall.object;

    if (best && best_iou >= cfg.iou_threshold) {
      claimed[best->id] = true;
      ev.matched_object = best->id;
      ev.error.reset();
    } else {
      ev.error = classify_error(ev.detection.box, category, image_objects);
    }
  }
  return out;
}

std::vector<EvaluatedDetection> match_category(const DatasetBundle& bundle,
                                               const BundleIndex& index,
                                               CategoryId category,
                                               const MatchConfig& cfg) {
  return match_detections(bundle, index, index.detections_of(category), category, cfg);
}

}  // namespace ctxbound
