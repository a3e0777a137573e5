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

#include "ctxbound/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

namespace ctxbound {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw DatasetError(where + ": missing key '" + key + "'");
  }
  return *it;
}

std::int64_t as_integer(const json& value, const std::string& where) {
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number_float()) {
    double d = value.get<double>();
    if (std::isfinite(d) && std::floor(d) == d) return static_cast<std::int64_t>(d);
  }
  throw DatasetError(where + ": expected an integer identifier");
}

double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) throw DatasetError(where + ": expected a number");
  return value.get<double>();
}

bool truthy(const json& value) {
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number()) return value.get<double>() != 0.0;
  return !value.is_null();
}

BoundingBox parse_box(const json& value, const std::string& where) {
  if (!value.is_array() || value.size() != 4) {
    throw DatasetError(where + ": bbox must be an array [x,y,w,h]");
  }
  BoundingBox box{as_number(value[0], where), as_number(value[1], where),
                  as_number(value[2], where), as_number(value[3], where)};
  if (!std::isfinite(box.x) || !std::isfinite(box.y) || !std::isfinite(box.w) ||
      !std::isfinite(box.h)) {
    throw DatasetError(where + ": non-finite box coordinate");
  }
  if (!(box.w > 0.0) || !(box.h > 0.0)) {
    throw DatasetError(where + ": degenerate box (w and h must be positive)");
  }
  return box;
}

void reject_crowd(const json& ann, const std::string& where) {
  for (const char* key : {"iscrowd", "ignore"}) {
    auto it = ann.find(key);
    if (it != ann.end() && truthy(*it)) {
      throw DatasetError(where + ": crowd/ignore annotations are not supported ('" +
                         key + "' is set)");
    }
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DatasetError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write file: " + path.string());
  out << doc.dump(1) << '\n';
}

json box_to_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

}  // namespace

bool BoundingBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w > 0.0 && h > 0.0;
}

DatasetBundle DatasetBundle::from(GroundTruth gt, std::vector<Detection> detections) {
  DatasetBundle bundle;
  bundle.images = std::move(gt.images);
  bundle.objects = std::move(gt.objects);
  bundle.categories = std::move(gt.categories);
  bundle.detections = std::move(detections);
  return bundle;
}

const Category* DatasetBundle::find_category(CategoryId id) const {
  for (const auto& c : categories) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::string DatasetBundle::category_name(CategoryId id) const {
  const Category* c = find_category(id);
  return c ? c->name : std::to_string(id);
}

GroundTruth parse_ground_truth(const json& doc) {
  if (!doc.is_object()) throw DatasetError("annotation document must be a JSON object");
  GroundTruth gt;

  const json& cats = require(doc, "categories", "annotations");
  if (!cats.is_array()) throw DatasetError("'categories' must be an array");
  std::unordered_set<CategoryId> known;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string where = "categories[" + std::to_string(i) + "]";
    Category c;
    c.id = as_integer(require(cats[i], "id", where), where);
    const json& name = require(cats[i], "name", where);
    if (!name.is_string()) throw DatasetError(where + ": 'name' must be a string");
    c.name = name.get<std::string>();
    if (!known.insert(c.id).second) {
      throw DatasetError(where + ": duplicate category id " + std::to_string(c.id));
    }
    gt.categories.push_back(std::move(c));
  }

  const json& images = require(doc, "images", "annotations");
  if (!images.is_array()) throw DatasetError("'images' must be an array");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    ImageInfo img;
    img.id = as_integer(require(images[i], "id", where), where);
    img.width = as_integer(require(images[i], "width", where), where);
    img.height = as_integer(require(images[i], "height", where), where);
    gt.images.push_back(img);
  }

  const json& anns = require(doc, "annotations", "annotations");
  if (!anns.is_array()) throw DatasetError("'annotations' must be an array");
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const json& a = anns[i];
    if (!a.is_object()) throw DatasetError(where + ": expected an object");
    reject_crowd(a, where);
    GroundTruthObject obj;
    obj.id = as_integer(require(a, "id", where), where);
    obj.image_id = as_integer(require(a, "image_id", where), where);
    obj.category = as_integer(require(a, "category_id", where), where);
    if (!known.contains(obj.category)) {
      throw DatasetError(where + ": unknown category " + std::to_string(obj.category));
    }
    obj.box = parse_box(require(a, "bbox", where), where);
    gt.objects.push_back(obj);
  }
  return gt;
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  try {
    return parse_ground_truth(read_json_file(path));
  } catch (const json::exception& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

std::vector<Detection> parse_detections(const json& doc) {
  if (!doc.is_array()) throw DatasetError("detection document must be a JSON array");
  std::vector<Detection> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "detections[" + std::to_string(i) + "]";
    const json& d = doc[i];
    if (!d.is_object()) throw DatasetError(where + ": expected an object");
    Detection det;
    det.image_id = as_integer(require(d, "image_id", where), where);
    det.category = as_integer(require(d, "category_id", where), where);
    det.box = parse_box(require(d, "bbox", where), where);
    const json& score = require(d, "score", where);
    if (score.is_string()) {
      // JSON has no NaN literal; producers sometimes emit it as a string.
      const auto& s = score.get_ref<const std::string&>();
      if (s == "NaN" || s == "nan" || s == "Infinity" || s == "-Infinity" ||
          s == "inf" || s == "-inf") {
        throw DatasetError(where + ": non-finite confidence");
      }
      throw DatasetError(where + ": 'score' must be a number");
    }
    det.confidence = as_number(score, where);
    if (!std::isfinite(det.confidence)) {
      throw DatasetError(where + ": non-finite confidence");
    }
    out.push_back(det);
  }
  return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  try {
    return parse_detections(read_json_file(path));
  } catch (const json::exception& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

json ground_truth_to_json(const DatasetBundle& bundle) {
  json images = json::array();
  for (const auto& img : bundle.images) {
    images.push_back({{"id", img.id}, {"width", img.width}, {"height", img.height}});
  }
  json anns = json::array();
  for (const auto& o : bundle.objects) {
    anns.push_back({{"id", o.id},
                    {"image_id", o.image_id},
                    {"category_id", o.category},
                    {"bbox", box_to_json(o.box)}});
  }
  json cats = json::array();
  for (const auto& c : bundle.categories) {
    cats.push_back({{"id", c.id}, {"name", c.name}});
  }
  return {{"images", images}, {"annotations", anns}, {"categories", cats}};
}

json detections_to_json(std::span<const Detection> detections) {
  json out = json::array();
  for (const auto& d : detections) {
    out.push_back({{"image_id", d.image_id},
                   {"category_id", d.category},
                   {"bbox", box_to_json(d.box)},
                   {"score", d.confidence}});
  }
  return out;
}

void write_ground_truth(const std::filesystem::path& path, const DatasetBundle& bundle) {
  write_json_file(path, ground_truth_to_json(bundle));
}

void write_detections(const std::filesystem::path& path,
                      std::span<const Detection> detections) {
  write_json_file(path, detections_to_json(detections));
}

std::vector<ValidationIssue> validate_bundle(const DatasetBundle& bundle) {
  std::vector<ValidationIssue> issues;
  std::unordered_set<ImageId> images;
  for (std::size_t i = 0; i < bundle.images.size(); ++i) {
    if (!images.insert(bundle.images[i].id).second) {
      issues.push_back({"image " + std::to_string(i) + ": duplicate image id " +
                        std::to_string(bundle.images[i].id)});
    }
  }
  std::unordered_set<CategoryId> cats;
  for (std::size_t i = 0; i < bundle.categories.size(); ++i) {
    if (!cats.insert(bundle.categories[i].id).second) {
      issues.push_back({"category " + std::to_string(i) + ": duplicate category id " +
                        std::to_string(bundle.categories[i].id)});
    }
  }
  std::unordered_set<ObjectId> object_ids;
  for (std::size_t i = 0; i < bundle.objects.size(); ++i) {
    const auto& o = bundle.objects[i];
    const std::string who = "object " + std::to_string(i) + " (id " + std::to_string(o.id) + ")";
    if (!object_ids.insert(o.id).second) issues.push_back({who + ": duplicate object id"});
    if (!images.contains(o.image_id)) {
      issues.push_back({who + ": undeclared image " + std::to_string(o.image_id)});
    }
    if (!cats.contains(o.category)) {
      issues.push_back({who + ": unknown category " + std::to_string(o.category)});
    }
    if (!o.box.valid()) issues.push_back({who + ": degenerate box"});
  }
  for (std::size_t i = 0; i < bundle.detections.size(); ++i) {
    const auto& d = bundle.detections[i];
    const std::string who = "detection " + std::to_string(i);
    if (!images.contains(d.image_id)) {
      issues.push_back({who + ": undeclared image " + std::to_string(d.image_id)});
    }
    if (!cats.contains(d.category)) {
      issues.push_back({who + ": unknown category " + std::to_string(d.category)});
    }
    if (!d.box.valid()) issues.push_back({who + ": degenerate box"});
    if (!std::isfinite(d.confidence)) issues.push_back({who + ": non-finite confidence"});
  }
  return issues;
}

std::vector<CategoryId> categories_without_objects(const DatasetBundle& bundle) {
  std::set<CategoryId> present;
  for (const auto& o : bundle.objects) present.insert(o.category);
  std::vector<CategoryId> out;
  for (const auto& c : bundle.categories) {
    if (!present.contains(c.id)) out.push_back(c.id);
  }
  return out;
}

BundleIndex::BundleIndex(const DatasetBundle& bundle) {
  for (std::size_t i = 0; i < bundle.objects.size(); ++i) {
    objects_by_image_[bundle.objects[i].image_id].push_back(i);
    objects_by_category_[bundle.objects[i].category].push_back(i);
  }
  for (std::size_t i = 0; i < bundle.detections.size(); ++i) {
    detections_by_category_[bundle.detections[i].category].push_back(i);
  }
}

namespace {
template <typename Map, typename Key>
std::span<const std::size_t> lookup(const Map& map, const Key& key) {
  auto it = map.find(key);
  if (it == map.end()) return {};
  return it->second;
}
}  // namespace

std::span<const std::size_t> BundleIndex::objects_in_image(ImageId image) const {
  return lookup(objects_by_image_, image);
}

std::span<const std::size_t> BundleIndex::objects_of(CategoryId category) const {
  return lookup(objects_by_category_, category);
}

std::span<const std::size_t> BundleIndex::detections_of(CategoryId category) const {
  return lookup(detections_by_category_, category);
}

}  // namespace ctxbound
