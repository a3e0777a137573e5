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

#include "ctxbound/relation.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>

namespace ctxbound {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string name_of(CategoryId id, std::span<const Category> categories) {
  for (const auto& c : categories) {
    if (c.id == id) return c.name;
  }
  return std::to_string(id);
}

std::string atom_string(const AtomicRelation& atom, std::span<const Category> categories) {
  return std::visit(
      overloaded{
          [](const ConstantRelation& r) { return std::string(r.value ? "const(1)" : "const(0)"); },
          [](const RandomRelation& r) { return "random(" + std::to_string(r.seed) + ")"; },
          [&](const CoOccurrenceRelation& r) {
            return "cooccur(" + name_of(r.category, categories) + ")";
          },
          [&](const SpatialRelation& r) {
            return "spatial(" + name_of(r.category, categories) + ",[" +
                   std::to_string(r.cell.v) + "," + std::to_string(r.cell.h) + "])";
          }},
      atom);
}

bool excluded_by_overlap(const EvaluatedDetection& det, const GroundTruthObject& o) {
  return iou(det.detection.box, o.box) > MatchConfig::kErrorOverlapFloor;
}

bool eval_atom(const AtomicRelation& atom, const EvaluatedDetection& det,
               std::span<const GroundTruthObject* const> image_objects,
               const SpatialFrameConfig& cfg) {
  return std::visit(
      overloaded{
          [](const ConstantRelation& r) { return r.value; },
          [&](const RandomRelation& r) {
            return (random_context_hash(r.seed, det.index) & 1U) != 0;
          },
          [&](const CoOccurrenceRelation& r) {
            return std::any_of(image_objects.begin(), image_objects.end(),
                               [&](const GroundTruthObject* o) {
                                 return o->category == r.category &&
                                        !excluded_by_overlap(det, *o);
                               });
          },
          [&](const SpatialRelation& r) {
            return std::any_of(
                image_objects.begin(), image_objects.end(), [&](const GroundTruthObject* o) {
                  return o->category == r.category && !excluded_by_overlap(det, *o) &&
                         spatial_cell(det.detection.box, o->box.center_x(),
                                      o->box.center_y(), cfg) == r.cell;
                });
          }},
      atom);
}

AtomicRelation as_atom(const Relation& rel) {
  return std::visit(
      overloaded{[](const CompositeRelation&) -> AtomicRelation { return ConstantRelation{}; },
                 [](const auto& r) -> AtomicRelation { return r; }},
      rel);
}

}  // namespace

Cell spatial_cell(const BoundingBox& det_box, double px, double py,
                  const SpatialFrameConfig& cfg) {
  const double side = cfg.height_factor * det_box.h;
  const double v = std::floor((py - det_box.center_y()) / side + 0.5);
  const double h = std::floor((px - det_box.center_x()) / side + 0.5);
  return {static_cast<int>(v), static_cast<int>(h)};
}

Relation to_relation(const AtomicRelation& atom) {
  return std::visit([](const auto& r) -> Relation { return r; }, atom);
}

bool is_composable(const Relation& rel) {
  return std::holds_alternative<CoOccurrenceRelation>(rel) ||
         std::holds_alternative<SpatialRelation>(rel);
}

std::string to_string(const Relation& rel, std::span<const Category> categories) {
  if (const auto* c = std::get_if<CompositeRelation>(&rel)) {
    return std::string(c->op == Connective::And ? "and(" : "or(") +
           atom_string(c->left, categories) + "," + atom_string(c->right, categories) + ")";
  }
  return atom_string(as_atom(rel), categories);
}

std::uint64_t random_context_hash(std::uint64_t seed, std::uint64_t detection_index) {
  // splitmix64 finalizer over a mix of both inputs.
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + detection_index + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool eval_relation(const Relation& rel, const EvaluatedDetection& det,
                   std::span<const GroundTruthObject* const> image_objects,
                   const SpatialFrameConfig& cfg) {
  if (const auto* c = std::get_if<CompositeRelation>(&rel)) {
    const bool a = eval_atom(c->left, det, image_objects, cfg);
    const bool b = eval_atom(c->right, det, image_objects, cfg);
    return c->op == Connective::And ? (a && b) : (a || b);
  }
  return eval_atom(as_atom(rel), det, image_objects, cfg);
}

std::vector<Relation> enumerate_atomic_relations(std::span<const Category> categories,
                                                 const SpatialFrameConfig& cfg) {
  std::vector<Relation> out;
  const int g = cfg.grid_extent;
  out.reserve(1 + categories.size() * (1 + (2 * g + 1) * (2 * g + 1)));
  out.emplace_back(ConstantRelation{false});
  for (const auto& c : categories) {
    out.emplace_back(CoOccurrenceRelation{c.id});
    for (int v = -g; v <= g; ++v) {
      for (int h = -g; h <= g; ++h) out.emplace_back(SpatialRelation{c.id, {v, h}});
    }
  }
  return out;
}

std::vector<Relation> compose_pairs(std::span<const Relation> ranked, std::size_t k) {
  std::vector<AtomicRelation> top;
  for (const auto& r : ranked) {
    if (top.size() >= k) break;
    if (is_composable(r)) top.push_back(as_atom(r));
  }
  std::vector<Relation> out;
  if (top.size() < 2) return out;
  out.reserve(top.size() * (top.size() - 1));
  for (std::size_t i = 0; i < top.size(); ++i) {
    for (std::size_t j = i + 1; j < top.size(); ++j) {
      out.emplace_back(CompositeRelation{Connective::And, top[i], top[j]});
      out.emplace_back(CompositeRelation{Connective::Or, top[i], top[j]});
    }
  }
  return out;
}

std::vector<ContextValue> annotate_context(std::span<const EvaluatedDetection> dets,
                                           const Relation& rel,
                                           const DatasetBundle& bundle,
                                           const BundleIndex& index,
                                           const SpatialFrameConfig& cfg) {
  std::vector<ContextValue> out;
  out.reserve(dets.size());
  std::vector<const GroundTruthObject*> objects;
  for (const auto& d : dets) {
    objects.clear();
    for (std::size_t oi : index.objects_in_image(d.detection.image_id)) {
      objects.push_back(&bundle.objects[oi]);
    }
    out.push_back(eval_relation(rel, d, objects, cfg) ? 1.0 : 0.0);
  }
  return out;
}

ContextTable::ContextTable(std::span<const EvaluatedDetection> dets,
                           const DatasetBundle& bundle, const BundleIndex& index,
                           const SpatialFrameConfig& cfg) {
  detection_indices_.reserve(dets.size());
  const int g = cfg.grid_extent;
  auto add = [this](const Key& key, std::uint32_t pos) {
    auto& list = hits_[key];
    if (list.empty() || list.back() != pos) list.push_back(pos);
  };
  for (std::uint32_t p = 0; p < dets.size(); ++p) {
    const EvaluatedDetection& d = dets[p];
    detection_indices_.push_back(d.index);
    for (std::size_t oi : index.objects_in_image(d.detection.image_id)) {
      const GroundTruthObject& o = bundle.objects[oi];
      if (excluded_by_overlap(d, o)) continue;
      add({o.category, kCoOccurrenceKey, kCoOccurrenceKey}, p);
      const Cell cell = spatial_cell(d.detection.box, o.box.center_x(), o.box.center_y(), cfg);
      if (std::abs(cell.v) <= g && std::abs(cell.h) <= g) add({o.category, cell.v, cell.h}, p);
    }
  }
}

std::vector<std::uint32_t> ContextTable::atom_positions(const AtomicRelation& atom) const {
  return std::visit(
      overloaded{
          [&](const ConstantRelation& r) {
            std::vector<std::uint32_t> all;
            if (r.value) {
              all.resize(size());
              std::iota(all.begin(), all.end(), 0U);
            }
            return all;
          },
          [&](const RandomRelation& r) {
            std::vector<std::uint32_t> out;
            for (std::uint32_t p = 0; p < size(); ++p) {
              if (random_context_hash(r.seed, detection_indices_[p]) & 1U) out.push_back(p);
            }
            return out;
          },
          [&](const CoOccurrenceRelation& r) {
            auto it = hits_.find({r.category, kCoOccurrenceKey, kCoOccurrenceKey});
            return it == hits_.end() ? std::vector<std::uint32_t>{} : it->second;
          },
          [&](const SpatialRelation& r) {
            auto it = hits_.find({r.category, r.cell.v, r.cell.h});
            return it == hits_.end() ? std::vector<std::uint32_t>{} : it->second;
          }},
      atom);
}

std::vector<std::uint32_t> ContextTable::positions(const Relation& rel) const {
  if (const auto* c = std::get_if<CompositeRelation>(&rel)) {
    const auto a = atom_positions(c->left);
    const auto b = atom_positions(c->right);
    std::vector<std::uint32_t> out;
    if (c->op == Connective::And) {
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    } else {
      std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    }
    return out;
  }
  return atom_positions(as_atom(rel));
}

std::vector<ContextValue> ContextTable::values(const Relation& rel) const {
  std::vector<ContextValue> out(size(), 0.0);
  for (std::uint32_t p : positions(rel)) out[p] = 1.0;
  return out;
}

}  // namespace ctxbound
