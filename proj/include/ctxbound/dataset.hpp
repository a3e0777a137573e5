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
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace ctxbound {

using ImageId = std::int64_t;
using ObjectId = std::int64_t;
using CategoryId = std::int64_t;

// Axis-aligned box in pixels, COCO layout: top-left corner plus extent.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ImageInfo {
  ImageId id = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;

  friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct Category {
  CategoryId id = 0;
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

struct GroundTruthObject {
  ObjectId id = 0;
  ImageId image_id = 0;
  CategoryId category = 0;
  BoundingBox box;

  friend bool operator==(const GroundTruthObject&,
                         const GroundTruthObject&) = default;
};

struct Detection {
  ImageId image_id = 0;
  CategoryId category = 0;
  BoundingBox box;
  double confidence = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruth {
  std::vector<ImageInfo> images;
  std::vector<GroundTruthObject> objects;
  std::vector<Category> categories;
};

struct DatasetBundle {
  std::vector<ImageInfo> images;
  std::vector<GroundTruthObject> objects;
  std::vector<Category> categories;
  std::vector<Detection> detections;

  static DatasetBundle from(GroundTruth gt, std::vector<Detection> detections);

  const Category* find_category(CategoryId id) const;
  // Name of the category, or its numeric id when undeclared.
  std::string category_name(CategoryId id) const;

  friend bool operator==(const DatasetBundle&, const DatasetBundle&) = default;
};

// Raised for unreadable or schema-violating input files.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

GroundTruth parse_ground_truth(const nlohmann::json& doc);
GroundTruth load_ground_truth(const std::filesystem::path& path);

std::vector<Detection> parse_detections(const nlohmann::json& doc);
std::vector<Detection> load_detections(const std::filesystem::path& path);

nlohmann::json ground_truth_to_json(const DatasetBundle& bundle);
nlohmann::json detections_to_json(std::span<const Detection> detections);
void write_ground_truth(const std::filesystem::path& path,
                        const DatasetBundle& bundle);
void write_detections(const std::filesystem::path& path,
                      std::span<const Detection> detections);

struct ValidationIssue {
  std::string message;
};

// Empty iff every cross-reference and uniqueness invariant of the bundle holds.
std::vector<ValidationIssue> validate_bundle(const DatasetBundle& bundle);

// Declared categories that have no ground-truth object. They are kept in the
// bundle and skipped by the analyses.
std::vector<CategoryId> categories_without_objects(const DatasetBundle& bundle);

// Lookup tables over an immutable bundle. Index lists are positions into
// bundle.objects / bundle.detections, in file order.
class BundleIndex {
 public:
  explicit BundleIndex(const DatasetBundle& bundle);

  std::span<const std::size_t> objects_in_image(ImageId image) const;
  std::span<const std::size_t> objects_of(CategoryId category) const;
  std::span<const std::size_t> detections_of(CategoryId category) const;

 private:
  std::unordered_map<ImageId, std::vector<std::size_t>> objects_by_image_;
  std::unordered_map<CategoryId, std::vector<std::size_t>> objects_by_category_;
  std::unordered_map<CategoryId, std::vector<std::size_t>>
      detections_by_category_;
};

}  // namespace ctxbound
